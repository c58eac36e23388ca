//! Date-window blocking: only records dated within the window are compared.

use chrono::NaiveDate;

/// Streams every unordered pair of records whose dates differ by at most
/// `window_days`, without materializing the quadratic pair set.
///
/// Pairs are `(i, j)` indices into the input slice, emitted in order of the
/// date-sorted sequence; within a pair `i` is the earlier-sorted record.
#[derive(Debug, Clone)]
pub struct CandidatePairs {
    order: Vec<usize>,
    days: Vec<i64>,
    window: i64,
    left: usize,
    right: usize,
}

impl CandidatePairs {
    pub fn new(dates: &[NaiveDate], window_days: u32) -> Self {
        let mut order: Vec<usize> = (0..dates.len()).collect();
        order.sort_by_key(|&i| (dates[i], i));
        let days = order
            .iter()
            .map(|&i| dates[i].signed_duration_since(NaiveDate::MIN).num_days())
            .collect();
        CandidatePairs {
            order,
            days,
            window: window_days as i64,
            left: 0,
            right: 1,
        }
    }
}

impl Iterator for CandidatePairs {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        while self.left < self.order.len() {
            if self.right < self.order.len()
                && self.days[self.right] - self.days[self.left] <= self.window
            {
                let pair = (self.order[self.left], self.order[self.right]);
                self.right += 1;
                return Some(pair);
            }
            self.left += 1;
            self.right = self.left + 1;
        }
        None
    }
}

pub fn generate_candidate_pairs(dates: &[NaiveDate], window_days: u32) -> Vec<(usize, usize)> {
    CandidatePairs::new(dates, window_days).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2011, 1, 1).unwrap() + chrono::Duration::days(n)
    }

    #[test]
    fn same_day_is_complete() {
        let dates = vec![day(0); 3];
        assert_eq!(generate_candidate_pairs(&dates, 31).len(), 3);
    }

    #[test]
    fn window_excludes_distant_pairs() {
        assert!(generate_candidate_pairs(&[day(0), day(45)], 31).is_empty());
        let pairs = generate_candidate_pairs(&[day(40), day(0), day(20)], 31);
        let mut sorted: Vec<_> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        sorted.sort();
        // indices: 0 -> day 40, 1 -> day 0, 2 -> day 20
        assert_eq!(sorted, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn window_is_inclusive() {
        assert_eq!(generate_candidate_pairs(&[day(0), day(31)], 31).len(), 1);
        assert!(generate_candidate_pairs(&[], 31).is_empty());
    }
}
