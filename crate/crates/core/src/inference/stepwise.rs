//! Bidirectional stepwise model selection by AIC.
//!
//! Search starts from the full candidate set (or, when that design is
//! singular, from a greedily assembled maximal non-singular subset) and at
//! each step considers dropping any included predictor or adding any
//! excluded one, taking the move with the lowest AIC until no move
//! improves on the current model. The intercept is always retained.

use super::glm::{glm_fit, Family, GlmFit};
use crate::error::{Error, Result};

/// Minimum AIC improvement for a move to count, guarding against cycling
/// on float noise.
const MIN_IMPROVEMENT: f64 = 1e-10;

pub fn stepwise_aic(
    candidates: &[(String, Vec<f64>)],
    y: &[f64],
    family: Family,
) -> Result<GlmFit> {
    for (i, (name, _)) in candidates.iter().enumerate() {
        if candidates[..i].iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate candidate name {name}"
            )));
        }
    }

    let fit_subset = |included: &[usize]| -> Result<GlmFit> {
        let cols: Vec<(String, Vec<f64>)> = included
            .iter()
            .map(|&i| candidates[i].clone())
            .collect();
        glm_fit(&cols, y, family)
    };

    // Starting point: the full model, or the largest front-to-back subset
    // that stays non-singular when the full design is rank deficient.
    let all: Vec<usize> = (0..candidates.len()).collect();
    let mut current: Vec<usize>;
    let mut current_fit: GlmFit;
    match fit_subset(&all) {
        Ok(fit) => {
            current = all;
            current_fit = fit;
        }
        Err(Error::SingularDesign(_)) => {
            let mut kept = Vec::new();
            for i in 0..candidates.len() {
                let mut trial = kept.clone();
                trial.push(i);
                match fit_subset(&trial) {
                    Ok(_) => kept = trial,
                    Err(Error::SingularDesign(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            current_fit = fit_subset(&kept)?;
            current = kept;
        }
        Err(e) => return Err(e),
    }

    let max_steps = 4 * candidates.len() + 4;
    for _ in 0..max_steps {
        let mut best: Option<(f64, Vec<usize>, GlmFit)> = None;
        let mut consider = |set: Vec<usize>| -> Result<()> {
            match fit_subset(&set) {
                Ok(fit) => {
                    if best.as_ref().is_none_or(|(a, _, _)| fit.aic < *a) {
                        best = Some((fit.aic, set, fit));
                    }
                }
                Err(Error::SingularDesign(_)) => {}
                Err(e) => return Err(e),
            }
            Ok(())
        };

        for drop_pos in 0..current.len() {
            let mut set = current.clone();
            set.remove(drop_pos);
            consider(set)?;
        }
        for add in 0..candidates.len() {
            if !current.contains(&add) {
                let mut set = current.clone();
                let pos = set.partition_point(|&i| i < add);
                set.insert(pos, add);
                consider(set)?;
            }
        }

        match best {
            Some((aic, set, fit)) if aic < current_fit.aic - MIN_IMPROVEMENT => {
                current = set;
                current_fit = fit;
            }
            _ => break,
        }
    }
    Ok(current_fit)
}
