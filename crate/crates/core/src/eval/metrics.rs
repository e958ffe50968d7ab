/// For each true drift point, the distance to the first event at or after
/// it and before the next true point, or `None` if it was missed.
pub fn detection_delay(events: &[u64], true_points: &[u64]) -> Vec<Option<u64>> {
    true_points
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let next = true_points.get(k + 1).copied().unwrap_or(u64::MAX);
            events
                .iter()
                .copied()
                .filter(|&e| e >= p && e < next)
                .min()
                .map(|e| e - p)
        })
        .collect()
}

/// Events not falling within `[p, p + tolerance]` of any true point `p`.
pub fn false_alarms(events: &[u64], true_points: &[u64], tolerance: u64) -> usize {
    events
        .iter()
        .filter(|&&e| {
            !true_points
                .iter()
                .any(|&p| e >= p && e - p <= tolerance)
        })
        .count()
}

/// True points with a detection no later than `tolerance` after them.
pub fn detected_within(events: &[u64], true_points: &[u64], tolerance: u64) -> usize {
    detection_delay(events, true_points)
        .into_iter()
        .filter(|d| d.is_some_and(|d| d <= tolerance))
        .count()
}

/// Sample mean and (n - 1) standard deviation; the deviation is zero for a
/// single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
