//! The `pssfield v1` text exchange format.
//!
//! ```text
//! pssfield v1; dim=2; counts=3,4; origin=0e0,0e0; spacing=5e-1,2.5e-1; components=2
//! <m values for node 0>
//! <m values for node 1>
//! ...
//! ```
//!
//! Nodes are listed row-major with the last axis fastest. Values are written
//! in shortest round-trip scientific notation so files are byte-stable.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forms::{pairs, ConnectionField, OneFormField};
use crate::frames::{FrameData, FrameRotationField};
use crate::grid::{GridChart, ScalarField};

const MAGIC: &str = "pssfield v1";

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn header(chart: &GridChart, components: usize) -> String {
    let counts: Vec<String> = chart.counts().iter().map(|c| c.to_string()).collect();
    format!(
        "{MAGIC}; dim={}; counts={}; origin={}; spacing={}; components={}",
        chart.dim(),
        counts.join(","),
        join(chart.origin()),
        join(chart.spacing()),
        components
    )
}

/// Writes the listed component fields, which must share one chart.
pub fn write_components<W: Write>(mut w: W, components: &[&ScalarField]) -> Result<()> {
    let chart = components
        .first()
        .ok_or_else(|| Error::Dimension("no components to write".into()))?
        .chart();
    for c in components {
        chart.check_same(c.chart())?;
    }
    writeln!(w, "{}", header(chart, components.len()))?;
    let mut line = String::new();
    for p in 0..chart.len() {
        line.clear();
        for (j, c) in components.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:e}", c.at(p)));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim().parse().map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad value {x:?} in {key}"),
            })
        })
        .collect()
}

/// Reads a file written by [`write_components`].
pub fn read_components<R: BufRead>(r: R) -> Result<(GridChart, Vec<ScalarField>)> {
    let mut lines = r.lines();
    let head = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })??;
    let mut fields = head.split(';').map(str::trim);
    if fields.next() != Some(MAGIC) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected {MAGIC:?} header"),
        });
    }
    let (mut dim, mut counts, mut origin, mut spacing, mut comps) = (None, None, None, None, None);
    for kv in fields.filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("malformed header entry {kv:?}"),
        })?;
        match k.trim() {
            "dim" => dim = Some(parse_list::<usize>(v, k)?[0]),
            "counts" => counts = Some(parse_list::<usize>(v, k)?),
            "origin" => origin = Some(parse_list::<f64>(v, k)?),
            "spacing" => spacing = Some(parse_list::<f64>(v, k)?),
            "components" => comps = Some(parse_list::<usize>(v, k)?[0]),
            _ => {}
        }
    }
    let missing = |k: &str| Error::Parse {
        line: 1,
        message: format!("header lacks {k}"),
    };
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let counts = counts.ok_or_else(|| missing("counts"))?;
    let m = comps.ok_or_else(|| missing("components"))?;
    if counts.len() != dim {
        return Err(Error::Parse {
            line: 1,
            message: "dim disagrees with counts".into(),
        });
    }
    let chart = GridChart::new(
        origin.ok_or_else(|| missing("origin"))?,
        spacing.ok_or_else(|| missing("spacing"))?,
        counts,
    )?;
    let mut cols = vec![Vec::with_capacity(chart.len()); m];
    for p in 0..chart.len() {
        let lineno = p + 2;
        let line = lines.next().ok_or(Error::Parse {
            line: lineno,
            message: "unexpected end of data".into(),
        })??;
        let mut count = 0;
        for (j, tok) in line.split_whitespace().enumerate() {
            if j >= m {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("more than {m} values"),
                });
            }
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad number {tok:?}"),
            })?;
            cols[j].push(v);
            count += 1;
        }
        if count != m {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {m} values, got {count}"),
            });
        }
    }
    let comps = cols
        .into_iter()
        .map(|c| ScalarField::new(chart.clone(), c))
        .collect::<Result<Vec<_>>>()?;
    Ok((chart, comps))
}

pub fn write_file(path: &Path, components: &[&ScalarField]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_components(&mut w, components)?;
    w.flush()?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<(GridChart, Vec<ScalarField>)> {
    let f = std::fs::File::open(path)?;
    read_components(std::io::BufReader::new(f))
}

pub fn oneform_components(theta: &OneFormField) -> Vec<&ScalarField> {
    theta.coeffs().iter().collect()
}

pub fn oneform_from_components(comps: Vec<ScalarField>) -> Result<OneFormField> {
    OneFormField::new(comps)
}

/// `ω_1..ω_n` then `ω_ij` for `i < j`, each as its `n` coefficients.
pub fn frame_components(fd: &FrameData) -> Vec<&ScalarField> {
    let mut out: Vec<&ScalarField> = fd.omega().iter().flat_map(|w| w.coeffs().iter()).collect();
    out.extend(
        fd.connection()
            .upper()
            .iter()
            .flat_map(|w| w.coeffs().iter()),
    );
    out
}

pub fn frame_from_components(chart: &GridChart, comps: Vec<ScalarField>) -> Result<FrameData> {
    let n = chart.dim();
    let expected = n * n + n * n * (n - 1) / 2;
    if comps.len() != expected {
        return Err(Error::Dimension(format!(
            "frame data on a {n}-dimensional chart needs {expected} components, got {}",
            comps.len()
        )));
    }
    let mut it = comps.into_iter();
    let mut take_form = || OneFormField::new(it.by_ref().take(n).collect());
    let omega = (0..n).map(|_| take_form()).collect::<Result<Vec<_>>>()?;
    let upper = pairs(n).map(|_| take_form()).collect::<Result<Vec<_>>>()?;
    FrameData::new(omega, ConnectionField::new(chart, upper)?)
}

pub fn write_frame(path: &Path, fd: &FrameData) -> Result<()> {
    write_file(path, &frame_components(fd))
}

pub fn read_frame(path: &Path) -> Result<FrameData> {
    let (chart, comps) = read_file(path)?;
    frame_from_components(&chart, comps)
}

/// Rotation entries `L_ij` row-major.
pub fn write_rotation(path: &Path, rot: &FrameRotationField) -> Result<()> {
    let fields = rot.entry_fields();
    write_file(path, &fields.iter().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in proptest::collection::vec(-1e300f64..1e300, 12), h in 1e-6f64..10.0) {
            let chart = GridChart::new(vec![-1.5, 0.25], vec![h, 2.0 * h], vec![3, 4]).unwrap();
            let f = ScalarField::new(chart.clone(), vals.clone()).unwrap();
            let g = f.map(|v| v * 1e-300);
            let mut buf = Vec::new();
            write_components(&mut buf, &[&f, &g]).unwrap();
            let (c2, comps) = read_components(buf.as_slice()).unwrap();
            prop_assert_eq!(&c2, &chart);
            prop_assert_eq!(comps[0].values(), f.values());
            prop_assert_eq!(comps[1].values(), g.values());
        }
    }

    #[test]
    fn header_layout() {
        let chart = GridChart::new(vec![0.0, 0.0], vec![0.5, 0.25], vec![3, 4]).unwrap();
        assert_eq!(
            header(&chart, 2),
            "pssfield v1; dim=2; counts=3,4; origin=0e0,0e0; spacing=5e-1,2.5e-1; components=2"
        );
    }

    #[test]
    fn diagnostics_name_the_line() {
        let text =
            "pssfield v1; dim=2; counts=3,3; origin=0,0; spacing=1,1; components=1\n0\n1\nx\n";
        match read_components(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_components("pssfield v2; dim=2".as_bytes()).is_err());
    }
}
