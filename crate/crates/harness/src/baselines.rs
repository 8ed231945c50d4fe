//! Baseline registry: initial polarization patterns and update masks.
//!
//! The estimation experiments start from the alternating H/V pattern so the
//! array samples both polarizations; the detection experiments start from
//! all-horizontal, the conventional fixed configuration. Optimized
//! baselines differ only in which polarization variables they may touch;
//! every baseline runs the same waveform optimization stage.

use crate::config::{BaselineKind, ObjectiveKind};
use polarsense_core::mm::UpdateMask;
use polarsense_core::polar::{PolBlockMatrix, PolVector};
use polarsense_core::Result;

/// Static polarization pattern of an experiment family.
pub fn static_pattern(objective: ObjectiveKind, n: usize) -> Result<PolBlockMatrix> {
    match objective {
        ObjectiveKind::Mse => PolBlockMatrix::alternating(n),
        ObjectiveKind::Sinr => PolBlockMatrix::uniform(n, PolVector::horizontal()),
    }
}

/// Static per-user combiner, mirroring the antenna pattern.
pub fn static_user_polarization(objective: ObjectiveKind, user_index: usize) -> PolVector {
    match objective {
        ObjectiveKind::Mse => {
            if user_index % 2 == 0 {
                PolVector::vertical()
            } else {
                PolVector::horizontal()
            }
        }
        ObjectiveKind::Sinr => PolVector::horizontal(),
    }
}

/// Which polarization variables the baseline optimizes.
pub fn update_mask(baseline: BaselineKind) -> UpdateMask {
    match baseline {
        BaselineKind::Static | BaselineKind::Dual1x | BaselineKind::Dual2x => UpdateMask::STATIC,
        BaselineKind::TxOnly => UpdateMask::TX_ONLY,
        BaselineKind::RxOnly => UpdateMask::RX_ONLY,
        BaselineKind::TxRx => UpdateMask::TX_RX,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_patterns_match_conventions() {
        let p = static_pattern(ObjectiveKind::Mse, 4).unwrap();
        let want = [[0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(p.vectors()[k].h(), w[0]);
            assert_eq!(p.vectors()[k].v(), w[1]);
        }

        let p = static_pattern(ObjectiveKind::Sinr, 4).unwrap();
        for v in p.vectors() {
            assert_eq!(v.h(), 1.0);
            assert_eq!(v.v(), 0.0);
        }
    }

    #[test]
    fn masks_select_the_right_variables() {
        assert!(!update_mask(BaselineKind::Static).any());
        assert!(update_mask(BaselineKind::TxOnly).tx);
        assert!(!update_mask(BaselineKind::TxOnly).rx);
        assert!(update_mask(BaselineKind::RxOnly).rx);
        assert!(update_mask(BaselineKind::TxRx).user);
        assert!(!update_mask(BaselineKind::Dual2x).any());
    }
}
