//! LLL on a random channel: the transform is unimodular and the reduced
//! basis has a larger minimum diagonal.

use vectorix::channel::gaussian_matrix;
use vectorix::linalg::{gram_schmidt_qr, lll_qr, lll_reduce};

fn main() -> vectorix::Result<()> {
    let a = gaussian_matrix(4, 11).adjoint();
    let red = lll_reduce(&a, 0.75)?;
    println!("swaps {}, unimodular {}, det(T) = {}", red.swaps, red.transform.is_unimodular(), red.transform.determinant());

    let plain = gram_schmidt_qr(&a)?;
    let reduced = lll_qr(&a, 1.0, true)?;
    println!("min r_ii^2: {:.4} -> {:.4}", plain.min_r_sqr(), reduced.min_r_sqr());
    println!("reconstruction error {:.1e}", reduced.reconstruction_error(&a));
    Ok(())
}
