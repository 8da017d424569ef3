//! Closed-form frames used as controls.

use crate::error::Result;
use crate::forms::{ConnectionField, OneFormField};
use crate::frames::FrameData;
use crate::grid::GridChart;

/// `ds² = dx² + e^{−2x} dy²` in a frame that is already special.
pub fn hyperbolic_frame(chart: &GridChart) -> Result<FrameData> {
    let w1 = OneFormField::coordinate(chart, 0);
    let w2 = OneFormField::from_fn(chart, |x| vec![0.0, (-x[0]).exp()])?;
    let w12 = OneFormField::from_fn(chart, |x| vec![0.0, -(-x[0]).exp()])?;
    FrameData::new(vec![w1, w2], ConnectionField::new(chart, vec![w12])?)
}

/// `ds² = dx² + cosh²x dy²` in its coordinate frame, which is not special.
pub fn cosh_frame(chart: &GridChart) -> Result<FrameData> {
    let w1 = OneFormField::coordinate(chart, 0);
    let w2 = OneFormField::from_fn(chart, |x| vec![0.0, x[0].cosh()])?;
    let w12 = OneFormField::from_fn(chart, |x| vec![0.0, x[0].sinh()])?;
    FrameData::new(vec![w1, w2], ConnectionField::new(chart, vec![w12])?)
}

/// The Euclidean coordinate frame in any dimension; curvature 0.
pub fn flat_frame(chart: &GridChart) -> Result<FrameData> {
    let omega = (0..chart.dim())
        .map(|a| OneFormField::coordinate(chart, a))
        .collect();
    FrameData::new(omega, ConnectionField::zero(chart))
}
