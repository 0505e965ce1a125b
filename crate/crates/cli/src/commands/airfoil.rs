//! Surrogate-guided minimization of the mock drag surface.

use std::path::PathBuf;

use almab_core::acquisition::{select_candidates, AcquisitionSpec};
use almab_core::env::{mock_cfd_drag, DragSurfaceSpec};
use almab_core::rng::{agent_stream, substream, INIT_STREAM};
use almab_core::surrogate::GpModel;
use rand::Rng as _;

use super::Context;
use crate::config::AirfoilSpec;
use crate::error::CliResult;
use crate::svg::{Chart, Series};
use crate::table::{sig6, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub camber: f64,
    pub thickness: f64,
    pub drag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedDesign {
    pub design: Design,
    /// Posterior standard deviation of the final surrogate at the design.
    pub posterior_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AirfoilOutcome {
    /// Every evaluation in order; the first `initial_points` are random.
    pub samples: Vec<Design>,
    /// Evaluated designs with the lowest posterior-mean drag, ascending;
    /// `drag` holds that posterior mean.
    pub top: Vec<RankedDesign>,
}

/// `initial_points` uniform designs, then `iterations` rounds of fitting
/// the surrogate and evaluating the acquisition's best grid point.
pub fn optimize(
    surface: &DragSurfaceSpec,
    spec: &AirfoilSpec,
    acquisition: &AcquisitionSpec,
    seed: u64,
) -> CliResult<AirfoilOutcome> {
    let bounds = DragSurfaceSpec::search_box();
    let mut init_rng = substream(seed, INIT_STREAM);
    let mut eval_rng = agent_stream(seed, 0);
    let grid = bounds.grid(spec.grid_per_axis);

    let mut x: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for _ in 0..spec.initial_points {
        let point: Vec<f64> =
            bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| l + (u - l) * init_rng.random::<f64>()).collect();
        y.push(mock_cfd_drag(point[0], point[1], surface, &mut eval_rng)?);
        x.push(point);
    }
    for _ in 0..spec.iterations {
        let model = GpModel::fit_normalized(&x, &y, spec.surrogate, &bounds)?;
        let pick = select_candidates(&grid, &model, acquisition)?.remove(0).candidate.coords;
        y.push(mock_cfd_drag(pick[0], pick[1], surface, &mut eval_rng)?);
        x.push(pick);
    }

    let model = GpModel::fit_normalized(&x, &y, spec.surrogate, &bounds)?;
    let samples: Vec<Design> = x.iter().zip(&y).map(|(p, d)| Design { camber: p[0], thickness: p[1], drag: *d }).collect();
    let posterior = model.predict_batch(&x)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| posterior[a].mean.total_cmp(&posterior[b].mean).then(a.cmp(&b)));
    let top = order
        .into_iter()
        .take(spec.top_k)
        .map(|i| RankedDesign {
            design: Design { drag: posterior[i].mean, ..samples[i] },
            posterior_sd: posterior[i].sd(),
        })
        .collect();
    Ok(AirfoilOutcome { samples, top })
}

pub fn run(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let surface = cfg.environment.drag_surface()?;
    let mut top = Table::new(
        "almab airfoil-top v1",
        &["replicate", "rank", "camber", "thickness", "drag", "posterior_sd"],
    );
    let mut samples = Table::new("almab airfoil-samples v1", &["replicate", "evaluation", "phase", "camber", "thickness", "drag"]);
    let mut chart = Chart::new("Design parameters vs drag", "parameter value", "drag coefficient");
    for rep in 0..cfg.replicates {
        let outcome = optimize(surface, &cfg.airfoil, &cfg.acquisition, cfg.seed.wrapping_add(rep as u64))?;
        for (rank, r) in outcome.top.iter().enumerate() {
            top.push(vec![
                rep.to_string(),
                (rank + 1).to_string(),
                sig6(r.design.camber),
                sig6(r.design.thickness),
                sig6(r.design.drag),
                sig6(r.posterior_sd),
            ]);
        }
        for (i, d) in outcome.samples.iter().enumerate() {
            let phase = if i < cfg.airfoil.initial_points { "initial" } else { "acquisition" };
            samples.push(vec![
                rep.to_string(),
                (i + 1).to_string(),
                phase.into(),
                sig6(d.camber),
                sig6(d.thickness),
                sig6(d.drag),
            ]);
        }
        if rep == 0 {
            chart.series.push(Series::markers("camber", outcome.samples.iter().map(|d| (d.camber, d.drag)).collect()));
            chart
                .series
                .push(Series::markers("thickness", outcome.samples.iter().map(|d| (d.thickness, d.drag)).collect()));
        }
    }
    let mut written = Vec::new();
    ctx.write_table("airfoil_top.csv", &top, &mut written)?;
    ctx.write_table("airfoil_samples.csv", &samples, &mut written)?;
    ctx.write_svg("airfoil.svg", &chart, &mut written)?;
    Ok(written)
}
