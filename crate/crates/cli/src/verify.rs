//! The oracle verification suites as one report.

use pai_core::oracle::{gaussian_suite, pai_suite, shift_reduction_suite, SuiteOptions, SuiteRow};

pub const DEFAULT_PAI_CASES: usize = 200;
pub const DEFAULT_SHIFT_CASES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub pai_cases: usize,
    pub shift_cases: usize,
    pub suite: SuiteOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            pai_cases: DEFAULT_PAI_CASES,
            shift_cases: DEFAULT_SHIFT_CASES,
            suite: SuiteOptions::default(),
        }
    }
}

/// Every row of every suite, in suite order.
pub fn run_verify(options: &VerifyOptions) -> Vec<SuiteRow> {
    let mut rows = gaussian_suite(options.suite);
    rows.extend(pai_suite(options.seed, options.pai_cases, options.suite));
    rows.extend(shift_reduction_suite(options.seed, options.shift_cases, options.suite));
    rows
}

pub fn all_passed(rows: &[SuiteRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_has_one_row_per_case() {
        let options = VerifyOptions {
            pai_cases: 4,
            shift_cases: 6,
            ..Default::default()
        };
        let rows = run_verify(&options);
        assert_eq!(rows.len(), 36 + 4 + 6);
        assert!(all_passed(&rows));
    }

    #[test]
    fn wrong_constant_is_caught() {
        let options = VerifyOptions {
            pai_cases: 4,
            shift_cases: 6,
            suite: SuiteOptions { wrong_constant: true },
            ..Default::default()
        };
        assert!(!all_passed(&run_verify(&options)));
    }
}
