//! Local QoS estimation from repository windows.

use crate::message::{QosAttribute, StatusKind};
use crate::repository::{LogRecord, Payload, Repository};

/// A measured local value; `low_confidence` marks the neutral default used
/// when the window holds no informative records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEstimate {
    pub value: f64,
    pub low_confidence: bool,
}

impl LocalEstimate {
    fn neutral(attribute: QosAttribute) -> Self {
        let value = match attribute {
            QosAttribute::Reliability => 1.0,
            QosAttribute::Cost => 0.0,
        };
        Self {
            value,
            low_confidence: true,
        }
    }
}

/// Estimate one component's local value from a window of log records.
///
/// Reliability is the success ratio over terminal status records (`init` and
/// `running` occupy window slots but count for neither side). Cost is the
/// mean logged energy delta times the component's execution frequency, i.e.
/// units per virtual second.
pub fn estimate_local(attribute: QosAttribute, window: &[LogRecord], frequency: f64) -> LocalEstimate {
    match attribute {
        QosAttribute::Reliability => {
            let mut successes = 0u64;
            let mut fails = 0u64;
            for record in window {
                if let Payload::Status(status) = &record.payload {
                    match status {
                        StatusKind::Success => successes += 1,
                        StatusKind::Fail => fails += 1,
                        StatusKind::Init | StatusKind::Running => {}
                    }
                }
            }
            let total = successes + fails;
            if total == 0 {
                LocalEstimate::neutral(attribute)
            } else {
                LocalEstimate {
                    value: successes as f64 / total as f64,
                    low_confidence: false,
                }
            }
        }
        QosAttribute::Cost => {
            let mut sum = 0.0;
            let mut count = 0u64;
            for record in window {
                if let Payload::Cost(cost) = &record.payload {
                    sum += cost;
                    count += 1;
                }
            }
            if count == 0 {
                LocalEstimate::neutral(attribute)
            } else {
                LocalEstimate {
                    value: (sum / count as f64) * frequency,
                    low_confidence: false,
                }
            }
        }
    }
}

/// Window-count shortcut equivalent to `estimate_local` over a
/// `query_window` result, avoiding record clones on the hot path.
pub fn estimate_from_repository(
    attribute: QosAttribute,
    repository: &Repository,
    component_id: &str,
    window: usize,
    frequency: f64,
) -> LocalEstimate {
    match attribute {
        QosAttribute::Reliability => {
            let (successes, fails) = repository.status_window_counts(component_id, window);
            let total = successes + fails;
            if total == 0 {
                LocalEstimate::neutral(attribute)
            } else {
                LocalEstimate {
                    value: successes as f64 / total as f64,
                    low_confidence: false,
                }
            }
        }
        QosAttribute::Cost => match repository.energy_window_mean(component_id, window) {
            None => LocalEstimate::neutral(attribute),
            Some(mean) => LocalEstimate {
                value: mean * frequency,
                low_confidence: false,
            },
        },
    }
}

/// Adaptation is needed when the error exceeds the setpoint times the
/// stability margin.
pub fn needs_adaptation(measured: f64, setpoint: f64, margin: f64) -> bool {
    (setpoint - measured).abs() > setpoint * margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::LogCategory;
    use crate::repository::LogRecord;

    fn status_window(statuses: &[StatusKind]) -> Vec<LogRecord> {
        statuses
            .iter()
            .enumerate()
            .map(|(i, s)| LogRecord::new(i as f64, "c", Payload::Status(*s)))
            .collect()
    }

    #[test]
    fn reliability_is_success_ratio() {
        let mut statuses = vec![StatusKind::Success; 9];
        statuses.push(StatusKind::Fail);
        let est = estimate_local(QosAttribute::Reliability, &status_window(&statuses), 1.0);
        assert_eq!(est.value, 0.9);
        assert!(!est.low_confidence);
    }

    #[test]
    fn init_and_running_are_excluded() {
        let est = estimate_local(
            QosAttribute::Reliability,
            &status_window(&[StatusKind::Init, StatusKind::Running]),
            1.0,
        );
        assert_eq!(est.value, 1.0);
        assert!(est.low_confidence);
    }

    #[test]
    fn empty_window_is_neutral() {
        let est = estimate_local(QosAttribute::Reliability, &[], 1.0);
        assert!(est.low_confidence);
        assert_eq!(est.value, 1.0);
        let est = estimate_local(QosAttribute::Cost, &[], 5.0);
        assert!(est.low_confidence);
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn cost_is_mean_energy_times_frequency() {
        let window: Vec<LogRecord> = [0.1, 0.2, 0.3]
            .iter()
            .enumerate()
            .map(|(i, c)| LogRecord::new(i as f64, "c", Payload::Cost(*c)))
            .collect();
        let est = estimate_local(QosAttribute::Cost, &window, 5.0);
        assert!((est.value - 1.0).abs() < 1e-12, "{}", est.value);
    }

    #[test]
    fn repository_shortcut_matches_record_path() {
        let mut repo = Repository::in_memory();
        let statuses = [
            StatusKind::Init,
            StatusKind::Success,
            StatusKind::Fail,
            StatusKind::Success,
            StatusKind::Running,
            StatusKind::Success,
        ];
        for (i, s) in statuses.iter().enumerate() {
            repo.append(LogRecord::new(i as f64, "c", Payload::Status(*s)))
                .unwrap();
        }
        for window in [1, 3, 6, 100] {
            let via_records = estimate_local(
                QosAttribute::Reliability,
                &repo.query_window("c", LogCategory::Status, window),
                1.0,
            );
            let via_counts =
                estimate_from_repository(QosAttribute::Reliability, &repo, "c", window, 1.0);
            assert_eq!(via_records, via_counts, "window {window}");
        }
    }

    #[test]
    fn stability_margin_rule() {
        // |0.90 - 0.90| = 0 -> no adaptation
        assert!(!needs_adaptation(0.90, 0.90, 0.02));
        // error 0.02 > 0.018
        assert!(needs_adaptation(0.88, 0.90, 0.02));
        // error 0.015 <= 0.018
        assert!(!needs_adaptation(0.885, 0.90, 0.02));
    }
}
