use super::SimError;
use crate::rational::Rational;

/// Simple moving average of the last `window` prices.
///
/// Timestamps order the series but do not weight it: every observation
/// counts once.
pub fn twap(prices: &[(i64, Rational)], window: usize) -> Result<Rational, SimError> {
    if prices.is_empty() {
        return Err(SimError::EmptySeries);
    }
    if window == 0 {
        return Err(SimError::ZeroWindow);
    }
    if window > prices.len() {
        return Err(SimError::WindowTooLarge {
            window,
            len: prices.len(),
        });
    }
    let tail = &prices[prices.len() - window..];
    let sum = tail.iter().fold(Rational::from_integer(0.into()), |acc, (_, p)| acc + p);
    Ok(sum / Rational::from_integer(window.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn series(prices: &[Rational]) -> Vec<(i64, Rational)> {
        prices.iter().cloned().enumerate().map(|(t, p)| (t as i64, p)).collect()
    }

    #[test]
    fn mean_of_window() {
        assert_eq!(twap(&series(&[int(2), int(2), int(2)]), 3).unwrap(), int(2));
        assert_eq!(twap(&series(&[int(2), int(2), int(8)]), 3).unwrap(), int(4));
        assert_eq!(twap(&series(&[int(100), int(2), int(8)]), 2).unwrap(), int(5));
    }

    #[test]
    fn single_pump_error_is_delta_over_window() {
        let w = 16;
        let mut prices = vec![int(7); w - 1];
        prices.push(int(7) * int(4));
        let avg = twap(&series(&prices), w).unwrap();
        assert_eq!((avg - int(7)) / int(7), ratio(3, 16));
    }

    #[test]
    fn errors() {
        assert_eq!(twap(&[], 1), Err(SimError::EmptySeries));
        assert_eq!(twap(&series(&[int(1)]), 0), Err(SimError::ZeroWindow));
        assert_eq!(
            twap(&series(&[int(1)]), 2),
            Err(SimError::WindowTooLarge { window: 2, len: 1 })
        );
    }
}
