use serde::{Deserialize, Serialize};

use super::ModelKind;
use crate::smc2::ProposalKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
        }
    }
}

/// One `(proposal, ε, seed)` run.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub model: ModelKind,
    pub proposal: ProposalKind,
    pub eps: f64,
    pub seed: u64,
    pub status: CellStatus,
    pub theta_hat: Option<Vec<f64>>,
    pub rmse: Option<f64>,
    pub sq_err: Option<Vec<f64>>,
    pub wall_s: f64,
    pub moves: usize,
    pub fallbacks: usize,
    pub error: Option<String>,
}

impl CellResult {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

/// Squared errors per parameter and their root mean.
pub fn rmse(theta_hat: &[f64], truth: &[f64]) -> (f64, Vec<f64>) {
    let sq: Vec<f64> = theta_hat.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).collect();
    let r = (sq.iter().sum::<f64>() / sq.len() as f64).sqrt();
    (r, sq)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Distribution of per-seed RMSE in one `(proposal, ε)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsSummary {
    pub proposal: ProposalKind,
    pub eps: f64,
    pub rmse_mean: Option<f64>,
    pub rmse_q25: Option<f64>,
    pub rmse_q75: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub wall_s: f64,
    pub means: Option<Vec<f64>>,
    pub moves: usize,
    pub fallbacks: usize,
}

/// Groups rows by `(proposal, ε)` in order of first appearance.
pub fn rmse_by_eps(rows: &[CellResult]) -> Vec<EpsSummary> {
    let mut keys: Vec<(ProposalKind, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(p, e)| p == r.proposal && e == r.eps) {
            keys.push((r.proposal, r.eps));
        }
    }
    keys.into_iter()
        .map(|(proposal, eps)| {
            let cell: Vec<&CellResult> = rows.iter().filter(|r| r.proposal == proposal && r.eps == eps).collect();
            let ok: Vec<&CellResult> = cell.iter().copied().filter(|r| r.is_ok()).collect();
            let rm = sorted(ok.iter().filter_map(|r| r.rmse));
            let stats = (!rm.is_empty()).then(|| {
                let mean = rm.iter().sum::<f64>() / rm.len() as f64;
                (mean, quantile(&rm, 0.25), quantile(&rm, 0.75))
            });
            let means = (!ok.is_empty()).then(|| {
                let d = ok[0].theta_hat.as_ref().map_or(0, |t| t.len());
                (0..d)
                    .map(|j| ok.iter().map(|r| r.theta_hat.as_ref().unwrap()[j]).sum::<f64>() / ok.len() as f64)
                    .collect()
            });
            EpsSummary {
                proposal,
                eps,
                rmse_mean: stats.map(|s| s.0),
                rmse_q25: stats.map(|s| s.1),
                rmse_q75: stats.map(|s| s.2),
                n_ok: ok.len(),
                n_failed: cell.len() - ok.len(),
                wall_s: cell.iter().map(|r| r.wall_s).sum(),
                means,
                moves: cell.iter().map(|r| r.moves).sum(),
                fallbacks: cell.iter().map(|r| r.fallbacks).sum(),
            }
        })
        .collect()
}

/// One line of `summary.json`: the proposal at its median-RMSE step size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProposalSummary {
    pub proposal: ProposalKind,
    pub eps_median: f64,
    pub means: Vec<f64>,
    pub rmse: f64,
    /// Wall time at `eps_median` relative to RW at its own median step.
    pub rr: Option<f64>,
    /// Median and interquartile range over ε of the per-cell mean RMSE.
    pub rmse_median: f64,
    pub rmse_iqr: f64,
    pub fallback_rate: f64,
    /// Step sizes where every seed failed.
    pub failed_eps: Vec<f64>,
}

/// Picks each proposal's median-RMSE cell: the cell whose mean RMSE is
/// closest to the median over ε, ties going to the smaller ε.
pub fn aggregate_rmse(rows: &[CellResult]) -> Vec<ProposalSummary> {
    let cells = rmse_by_eps(rows);
    let mut proposals: Vec<ProposalKind> = Vec::new();
    for c in &cells {
        if !proposals.contains(&c.proposal) {
            proposals.push(c.proposal);
        }
    }
    let mut out: Vec<(ProposalSummary, f64)> = Vec::new();
    for p in proposals {
        let mine: Vec<&EpsSummary> = cells.iter().filter(|c| c.proposal == p).collect();
        let usable: Vec<&EpsSummary> = mine.iter().copied().filter(|c| c.rmse_mean.is_some()).collect();
        if usable.is_empty() {
            continue;
        }
        let means = sorted(usable.iter().map(|c| c.rmse_mean.unwrap()));
        let median = quantile(&means, 0.5);
        let iqr = quantile(&means, 0.75) - quantile(&means, 0.25);
        let chosen = usable
            .iter()
            .min_by(|a, b| {
                let da = (a.rmse_mean.unwrap() - median).abs();
                let db = (b.rmse_mean.unwrap() - median).abs();
                da.total_cmp(&db).then(a.eps.total_cmp(&b.eps))
            })
            .unwrap();
        let (moves, fallbacks) = mine.iter().fold((0, 0), |(m, f), c| (m + c.moves, f + c.fallbacks));
        out.push((
            ProposalSummary {
                proposal: p,
                eps_median: chosen.eps,
                means: chosen.means.clone().unwrap_or_default(),
                rmse: chosen.rmse_mean.unwrap(),
                rr: None,
                rmse_median: median,
                rmse_iqr: iqr,
                fallback_rate: if moves == 0 { 0.0 } else { fallbacks as f64 / moves as f64 },
                failed_eps: mine.iter().filter(|c| c.rmse_mean.is_none()).map(|c| c.eps).collect(),
            },
            chosen.wall_s,
        ));
    }
    let rw_wall = out.iter().find(|(s, _)| s.proposal == ProposalKind::Rw).map(|(_, w)| *w);
    out.into_iter()
        .map(|(mut s, wall)| {
            s.rr = rw_wall.filter(|w| *w > 0.0).map(|w| wall / w);
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: ProposalKind, eps: f64, seed: u64, rmse: Option<f64>, wall: f64) -> CellResult {
        CellResult {
            model: ModelKind::Sir,
            proposal: p,
            eps,
            seed,
            status: if rmse.is_some() { CellStatus::Ok } else { CellStatus::Failed },
            theta_hat: rmse.map(|r| vec![0.6 + r, 0.3]),
            rmse,
            sq_err: None,
            wall_s: wall,
            moves: 0,
            fallbacks: 0,
            error: None,
        }
    }

    #[test]
    fn single_row_statistics() {
        let rows = vec![row(ProposalKind::Rw, 0.5, 0, Some(0.2), 1.5)];
        let cells = rmse_by_eps(&rows);
        assert_eq!(cells.len(), 1);
        assert_eq!((cells[0].rmse_mean, cells[0].rmse_q25, cells[0].rmse_q75), (Some(0.2), Some(0.2), Some(0.2)));
        let s = aggregate_rmse(&rows);
        assert_eq!(s[0].eps_median, 0.5);
        assert_eq!(s[0].rmse, 0.2);
        assert_eq!(s[0].rr, Some(1.0));
        assert_eq!(s[0].means, vec![0.8, 0.3]);
    }

    #[test]
    fn two_step_sizes_tie_breaks_to_smaller() {
        let rows = vec![
            row(ProposalKind::Fo, 0.02, 0, Some(0.1), 1.0),
            row(ProposalKind::Fo, 0.01, 0, Some(0.3), 2.0),
        ];
        let s = aggregate_rmse(&rows);
        assert!((s[0].rmse_median - 0.2).abs() < 1e-15);
        assert_eq!(s[0].eps_median, 0.01);
        // no RW rows, so no relative runtime
        assert_eq!(s[0].rr, None);
    }

    #[test]
    fn hand_computed_medians_and_rr() {
        let mut rows = Vec::new();
        for (i, r) in [0.5, 0.1, 0.3, 0.2, 0.4].iter().enumerate() {
            rows.push(row(ProposalKind::Rw, 0.1 * (i + 1) as f64, 0, Some(*r), 2.0));
        }
        rows.push(row(ProposalKind::So, 1.0, 0, Some(0.05), 7.0));
        rows.push(row(ProposalKind::So, 1.0, 1, Some(0.15), 3.0));
        rows.push(row(ProposalKind::So, 2.0, 0, None, 1.0));
        let s = aggregate_rmse(&rows);
        assert_eq!(s[0].eps_median, 0.30000000000000004);
        assert_eq!(s[0].rmse, 0.3);
        assert!((s[0].rmse_iqr - 0.2).abs() < 1e-15);
        assert_eq!(s[1].rr, Some(5.0));
        assert!((s[1].rmse - 0.1).abs() < 1e-15);
        assert_eq!(s[1].failed_eps, vec![2.0]);
        let cells = rmse_by_eps(&rows);
        assert_eq!(cells.len(), 7);
        assert_eq!(cells[6].n_failed, 1);
        assert_eq!(cells[6].rmse_mean, None);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn rmse_vector_convention() {
        let (r, sq) = rmse(&[0.7, 1.0, 1.3], &[0.75, 1.0, 1.0]);
        assert!((sq[0] - 0.0025).abs() < 1e-15);
        assert!((r - ((0.0025 + 0.09) / 3.0f64).sqrt()).abs() < 1e-15);
    }
}
