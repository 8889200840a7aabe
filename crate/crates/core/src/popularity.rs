/// Zipf request probabilities `P_f ∝ f^-gamma` for files ranked `1..=num_files`.
pub fn zipf_popularity(num_files: usize, gamma: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=num_files).map(|f| (f as f64).powf(-gamma)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}
