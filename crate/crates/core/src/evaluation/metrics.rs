use crate::error::{Error, Result};

/// Mean absolute residual.
pub fn mae(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(residuals.iter().map(|e| libm::fabs(*e)).sum::<f64>() / residuals.len() as f64)
}

/// Root mean squared residual.
pub fn rmse(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(libm::sqrt(residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn zeros_and_constants() {
        assert_eq!(mae(&[0.0; 48]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0; 48]).unwrap(), 0.0);
        assert_eq!(mae(&[-2.5; 24]).unwrap(), 2.5);
        assert_eq!(rmse(&[-2.5; 24]).unwrap(), 2.5);
        assert_eq!(mae(&[]), Err(Error::EmptyInput));
        assert_eq!(rmse(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn small_hand_example() {
        let e = [3.0, -4.0, 0.0, 1.0];
        assert_eq!(mae(&e).unwrap(), 2.0);
        assert!((rmse(&e).unwrap() - libm::sqrt(26.0 / 4.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn sign_flip_and_permutation(mut e in prop::collection::vec(-100.0f64..100.0, 1..200), seed in any::<u64>()) {
            let flipped: Vec<f64> = e.iter().map(|x| -x).collect();
            prop_assert_eq!(mae(&e).unwrap(), mae(&flipped).unwrap());
            prop_assert_eq!(rmse(&e).unwrap(), rmse(&flipped).unwrap());
            let before = (mae(&e).unwrap(), rmse(&e).unwrap());
            let k = (seed as usize) % e.len();
            e.rotate_left(k);
            e.reverse();
            let after = (mae(&e).unwrap(), rmse(&e).unwrap());
            prop_assert!((before.0 - after.0).abs() <= 1e-12 * (1.0 + before.0));
            prop_assert!((before.1 - after.1).abs() <= 1e-12 * (1.0 + before.1));
            prop_assert!(before.0 >= 0.0 && before.1 >= 0.0);
        }
    }
}
