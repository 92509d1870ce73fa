use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

use super::Membership;
use crate::model::{ActivityRecord, Domain};

/// Weeks counted toward activity volumes, ending at `end` (inclusive)
/// or at the most recent week present in the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivityWindow {
    pub weeks: u32,
    pub end: Option<DateTime<Utc>>,
}

impl Default for ActivityWindow {
    fn default() -> Self {
        ActivityWindow { weeks: 12, end: None }
    }
}

impl ActivityWindow {
    fn bounds(&self, records: &[ActivityRecord]) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        let end = self.end.or_else(|| records.iter().map(|r| r.week_start).max())?;
        Some((end - Duration::weeks(i64::from(self.weeks)), end))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityStats {
    pub group: usize,
    pub volume: u64,
    /// Members with at least one record in the window.
    pub reporting: usize,
    /// Volume per reporting member.
    pub avg: f64,
    pub top_instance: Option<Domain>,
    pub top_volume: u64,
    pub top_pct: f64,
    pub no_data: bool,
}

/// Status volumes per group over the window.
pub fn activity_stats(m: &Membership, activity: &[ActivityRecord], window: ActivityWindow) -> Vec<ActivityStats> {
    let mut per_member: BTreeMap<&Domain, u64> = BTreeMap::new();
    if let Some((start, end)) = window.bounds(activity) {
        for r in activity {
            if r.week_start > start && r.week_start <= end && m.get(&r.instance).is_some() {
                *per_member.entry(&r.instance).or_insert(0) += r.statuses;
            }
        }
    }
    let mut out: Vec<ActivityStats> = (0..m.group_count())
        .map(|group| ActivityStats {
            group,
            volume: 0,
            reporting: 0,
            avg: 0.0,
            top_instance: None,
            top_volume: 0,
            top_pct: 0.0,
            no_data: true,
        })
        .collect();
    // BTreeMap order makes the first strict maximum the smallest domain.
    for (d, v) in per_member {
        let s = &mut out[m.group_or_neutral(d)];
        s.volume += v;
        s.reporting += 1;
        s.no_data = false;
        if s.top_instance.is_none() || v > s.top_volume {
            s.top_instance = Some(d.clone());
            s.top_volume = v;
        }
    }
    for s in &mut out {
        if s.reporting > 0 {
            s.avg = s.volume as f64 / s.reporting as f64;
        }
        if s.volume > 0 {
            s.top_pct = 100.0 * s.top_volume as f64 / s.volume as f64;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarize::partition::Partition;
    use chrono::TimeZone;

    fn d(s: &str) -> Domain {
        Domain::literal(s)
    }

    fn week(i: i64) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2023, 1, 2, 0, 0, 0).unwrap() + Duration::weeks(i)
    }

    fn rec(x: &str, w: i64, statuses: u64) -> ActivityRecord {
        ActivityRecord {
            instance: d(x),
            week_start: week(w),
            statuses,
            logins: 0,
            registrations: 0,
        }
    }

    fn membership(groups: &[(&str, usize)]) -> Membership {
        let mut p = Partition::new(2);
        for (x, g) in groups {
            p.assign(d(x), *g).unwrap();
        }
        let universe: Vec<Domain> = groups.iter().map(|(x, _)| d(x)).collect();
        Membership::new(&universe, &p)
    }

    #[test]
    fn single_instance() {
        let m = membership(&[("a", 1)]);
        let s = &activity_stats(&m, &[rec("a", 0, 100)], ActivityWindow::default())[1];
        assert_eq!((s.volume, s.reporting, s.avg, s.top_pct), (100, 1, 100.0, 100.0));
        assert_eq!(s.top_instance, Some(d("a")));
    }

    #[test]
    fn average_over_reporting_members() {
        let m = membership(&[("a", 1), ("b", 1), ("silent", 1)]);
        let s = &activity_stats(&m, &[rec("a", 0, 30), rec("b", 0, 70)], ActivityWindow::default())[1];
        assert_eq!(s.avg, 50.0);
        assert_eq!(s.top_pct, 70.0);
        assert_eq!(s.top_instance, Some(d("b")));
    }

    #[test]
    fn window_keeps_the_last_twelve_weeks() {
        let m = membership(&[("a", 1)]);
        let recs: Vec<_> = (0..15).map(|w| rec("a", w, 1)).collect();
        assert_eq!(activity_stats(&m, &recs, ActivityWindow::default())[1].volume, 12);
    }

    #[test]
    fn top_share_at_scale() {
        // 54.55% of 1.74e6 is the published share of the most active member.
        let m = membership(&[("big", 2), ("rest", 2)]);
        let recs = [rec("big", 0, 949_170), rec("rest", 0, 1_740_000 - 949_170)];
        let s = &activity_stats(&m, &recs, ActivityWindow::default())[2];
        assert_eq!(s.volume, 1_740_000);
        assert!((s.top_pct - 54.55).abs() < 0.005);
    }

    #[test]
    fn no_data_is_flagged() {
        let m = membership(&[("a", 1)]);
        let s = &activity_stats(&m, &[], ActivityWindow::default())[1];
        assert!(s.no_data);
        assert_eq!((s.volume, s.avg, s.top_pct), (0, 0.0, 0.0));
    }
}
