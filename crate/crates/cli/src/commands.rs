use std::fs;
use std::io::Write;

use htp_core::certify::{blowup_sweep, certification_suite, certify, BlowupEntry, Bound, Source};
use htp_core::disc_solver::{
    c_nu, field_grid, norms, recommended_truncation, solve_modal, solve_plane_wave, FieldPart,
    Grid, ModalSolution, ModalSource, PlaneWave,
};
use htp_core::morawetz::{identity_suite, SuiteSizes};
use htp_core::resonances::scan_strip;
use htp_core::Params;
use num_complex::Complex64;
use serde::Serialize;

use crate::output::{self, float, Provenance};
use crate::{Failure, Format, Part, Settings, SourceKind};

const DEFAULT_NODES: usize = 32;
const DEFAULT_SEED: u64 = 20261015;

/// Bytes to write plus a failure to report after writing them.
type Produced = (Vec<u8>, Option<Failure>);

pub fn run(name: &str, s: &Settings) -> Result<(), Failure> {
    let prov = Provenance {
        tool: "htp",
        version: env!("CARGO_PKG_VERSION"),
        command: name.to_string(),
        config: set_fields(s)?,
        seed: matches!(name, "certify" | "identity-check").then(|| s.seed.unwrap_or(DEFAULT_SEED)),
    };
    let (bytes, failure) = match name {
        "solve" => solve(s, &prov)?,
        "resonances" => resonances(s, &prov)?,
        "certify" => certify_cmd(s, &prov)?,
        "identity-check" => identity(s, &prov)?,
        "blowup" => blowup(s, &prov)?,
        "field" => field(s, &prov)?,
        _ => unreachable!("unknown subcommand {name}"),
    };
    match &s.out {
        Some(path) => fs::write(path, &bytes)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::Usage(e.to_string()))?,
    }
    failure.map_or(Ok(()), Err)
}

/// The flags that were given, without the unset ones.
fn set_fields(s: &Settings) -> Result<serde_json::Value, Failure> {
    let mut v = serde_json::to_value(s).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(map) = v.as_object_mut() {
        map.retain(|key, value| !value.is_null() && !(key == "sweep" && *value == false));
    }
    Ok(v)
}

fn params(s: &Settings, default_ni: f64, default_k: f64) -> Result<Params, Failure> {
    let p = Params {
        n_i: s.ni.unwrap_or(default_ni),
        n_o: s.no.unwrap_or(1.0),
        a_i: s.ai.unwrap_or(1.0),
        a_o: s.ao.unwrap_or(1.0),
        a_d: s.a_d.unwrap_or(1.0),
        a_n: s.a_n.unwrap_or(1.0),
        k: Complex64::new(s.k.unwrap_or(default_k), 0.0),
        r_report: s.r.unwrap_or(2.0),
    };
    p.validate()?;
    Ok(p)
}

fn format(s: &Settings, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
    let f = s.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::Usage(format!("format {f:?} not supported here")))
    }
}

fn amplitude(s: &Settings) -> Complex64 {
    Complex64::new(s.amplitude.unwrap_or(1.0), 0.0)
}

fn plane_wave(s: &Settings) -> PlaneWave {
    PlaneWave {
        amplitude: amplitude(s),
        angle: s.angle.unwrap_or(0.0),
    }
}

fn modal_source(s: &Settings, kind: SourceKind, k: f64) -> Result<ModalSource, Failure> {
    let nu = s.mode.unwrap_or(0);
    if amplitude(s) == Complex64::new(0.0, 0.0) {
        return Ok(ModalSource::zero(nu));
    }
    Ok(match kind {
        SourceKind::ModalJ => ModalSource::volume(nu, amplitude(s) * c_nu(nu, k)?, k),
        SourceKind::Boundary => ModalSource::boundary(nu, amplitude(s), amplitude(s)),
        SourceKind::Plane => unreachable!("plane waves are not modal sources"),
    })
}

fn source(s: &Settings, k: f64) -> Result<Source, Failure> {
    Ok(match s.source.unwrap_or(SourceKind::ModalJ) {
        SourceKind::Plane => Source::PlaneWave(plane_wave(s)),
        kind => Source::Modal(vec![modal_source(s, kind, k)?]),
    })
}

fn solve_all(p: &Params, s: &Settings, r_eval: f64) -> Result<Vec<ModalSolution>, Failure> {
    let k = p.k.re;
    Ok(match s.source.unwrap_or(SourceKind::ModalJ) {
        SourceKind::Plane => {
            let nu_max = s.numax.unwrap_or_else(|| recommended_truncation(p, r_eval));
            solve_plane_wave(p, &plane_wave(s), nu_max)?.modes
        }
        kind => vec![solve_modal(p, &modal_source(s, kind, k)?)?],
    })
}

fn solve(s: &Settings, prov: &Provenance) -> Result<Produced, Failure> {
    let p = params(s, 3.0, 1.0)?;
    let sols = solve_all(&p, s, p.r_report)?;
    let report = norms(&p, &sols, s.nodes.unwrap_or(DEFAULT_NODES))?;
    let bytes = match format(s, Format::Json, &[Format::Json, Format::Csv])? {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                params: &'a Params,
                norms: &'a htp_core::disc_solver::NormReport,
                modes: &'a [ModalSolution],
            }
            output::json(
                prov,
                &Out {
                    params: &p,
                    norms: &report,
                    modes: &sols,
                },
            )
        }
        _ => {
            let rows: Vec<Vec<String>> = sols
                .iter()
                .map(|m| {
                    let (a, b) = (m.a_int.to_c64(), m.b_ext.to_c64());
                    vec![
                        m.nu.to_string(),
                        float(a.re),
                        float(a.im),
                        float(b.re),
                        float(b.im),
                        float(m.condition),
                        float(m.residual),
                    ]
                })
                .collect();
            output::csv(
                prov,
                &[
                    "nu",
                    "re_a_int",
                    "im_a_int",
                    "re_b_ext",
                    "im_b_ext",
                    "condition",
                    "residual",
                ],
                &rows,
            )
        }
    }
    .map_err(Failure::Usage)?;
    Ok((bytes, None))
}

fn resonances(s: &Settings, prov: &Provenance) -> Result<Produced, Failure> {
    let p = params(s, 3.0, 1.0)?;
    let nus = match s.mode {
        Some(nu) => nu..=nu,
        None => 0..=s.numax.unwrap_or(10) as i32,
    };
    let scan = scan_strip(&p, nus, 1..=s.mmax.unwrap_or(1))?;
    let failure = (!scan.failures.is_empty()).then(|| {
        let f = &scan.failures[0];
        Failure::Accuracy(format!(
            "{} mode(s) failed, first nu={}: {}",
            scan.failures.len(),
            f.nu,
            f.error
        ))
    });
    let bytes = match format(s, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => output::json(prov, &scan),
        _ => {
            let rows: Vec<Vec<String>> = scan
                .resonances
                .iter()
                .map(|r| {
                    vec![
                        r.nu.to_string(),
                        r.m.to_string(),
                        float(r.k.re),
                        float(r.k.im),
                        float(r.residual),
                        r.verified.to_string(),
                        r.newton_iters.to_string(),
                    ]
                })
                .collect();
            output::csv(
                prov,
                &[
                    "nu",
                    "m",
                    "re_k",
                    "im_k",
                    "residual",
                    "verified",
                    "newton_iters",
                ],
                &rows,
            )
        }
    }
    .map_err(Failure::Usage)?;
    Ok((bytes, failure))
}

fn certify_cmd(s: &Settings, prov: &Provenance) -> Result<Produced, Failure> {
    let bound = s.bound.unwrap_or(Bound::Volume);
    if let Some(cases) = s.cases {
        let report = certification_suite(bound, cases, prov.seed.unwrap_or(DEFAULT_SEED));
        let failure = report.failures.first().map(|f| {
            let msg = format!(
                "{} of {cases} cases failed, first case {}: {}",
                report.failures.len(),
                f.case,
                f.error
            );
            if report.failures.iter().any(|f| f.falsification) {
                Failure::Falsified(msg)
            } else {
                Failure::Accuracy(msg)
            }
        });
        let bytes = output::json(prov, &report).map_err(Failure::Usage)?;
        return Ok((bytes, failure));
    }
    let p = params(s, 0.5, 1.0)?;
    if !s.sweep {
        let report = certify(&p, &source(s, p.k.re)?, bound)?;
        return Ok((output::json(prov, &report).map_err(Failure::Usage)?, None));
    }
    let (kmin, kmax, steps) = (
        s.kmin.unwrap_or(0.5),
        s.kmax.unwrap_or(50.0),
        s.steps.unwrap_or(20),
    );
    if !(kmin > 0.0 && kmax >= kmin && steps >= 1) {
        return Err(Failure::Usage(
            "sweep needs 0 < kmin <= kmax and steps >= 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = if steps == 1 {
            0.0
        } else {
            i as f64 / (steps - 1) as f64
        };
        let k = kmin * (kmax / kmin).powf(t);
        let pk = p.with_k(k.into());
        let r = certify(&pk, &source(s, k)?, bound)?;
        rows.push(vec![
            float(k),
            float(r.lhs_value),
            float(r.rhs_value),
            float(r.margin),
        ]);
    }
    let bytes = output::csv(prov, &["k", "lhs", "rhs", "margin"], &rows).map_err(Failure::Usage)?;
    Ok((bytes, None))
}

fn identity(s: &Settings, prov: &Provenance) -> Result<Produced, Failure> {
    let sizes = match s.trials {
        Some(n) => SuiteSizes {
            pointwise: n,
            ludwig: n,
            integrated: (n / 10).max(1),
            radiating: (n / 10).max(1),
            trace: (n / 10).max(1),
        },
        None => SuiteSizes::default(),
    };
    let report = identity_suite(&sizes, prov.seed.unwrap_or(DEFAULT_SEED));
    let failure = (!report.passed()).then(|| {
        let names: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Failure::Falsified(format!("identity checks failed: {}", names.join(", ")))
    });
    Ok((
        output::json(prov, &report).map_err(Failure::Usage)?,
        failure,
    ))
}

fn blowup(s: &Settings, prov: &Provenance) -> Result<Produced, Failure> {
    let entries = blowup_sweep(
        s.ni.unwrap_or(3.0),
        s.a_n.unwrap_or(1.0),
        0..=s.numax.unwrap_or(64) as i32,
    )?;
    let failed: Vec<String> = entries
        .iter()
        .filter_map(|e| match e {
            BlowupEntry::Failed { nu, error } => Some(format!("nu={nu}: {error}")),
            BlowupEntry::Row(_) => None,
        })
        .collect();
    let failure = (!failed.is_empty()).then(|| Failure::Accuracy(failed.join("; ")));
    let bytes = match format(s, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => output::json(prov, &entries),
        _ => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .filter_map(|e| match e {
                    BlowupEntry::Row(r) => Some(vec![
                        r.nu.to_string(),
                        float(r.k),
                        float(r.l2_int_weighted),
                        float(r.h1_int),
                        float(r.l2_ext_weighted),
                        float(r.h1_ext),
                        float(r.combined),
                    ]),
                    BlowupEntry::Failed { .. } => None,
                })
                .collect();
            output::csv(
                prov,
                &[
                    "nu",
                    "k",
                    "l2_int_weighted",
                    "h1_int",
                    "l2_ext_weighted",
                    "h1_ext",
                    "combined",
                ],
                &rows,
            )
        }
    }
    .map_err(Failure::Usage)?;
    Ok((bytes, failure))
}

fn field(s: &Settings, prov: &Provenance) -> Result<Produced, Failure> {
    let extent = s.extent.unwrap_or(2.0);
    let res = s.res.unwrap_or(200);
    if !(extent > 0.0 && extent.is_finite()) || res < 2 {
        return Err(Failure::Usage("field needs extent > 0 and res >= 2".into()));
    }
    let mut p = params(s, 1.0, 1.0)?;
    let corner = extent * 2f64.sqrt();
    if s.r.is_none() {
        p.r_report = p.r_report.max(corner);
    }
    let is_plane = s.source.unwrap_or(SourceKind::Plane) == SourceKind::Plane;
    let settings = Settings {
        source: Some(s.source.unwrap_or(SourceKind::Plane)),
        ..s.clone()
    };
    let sols = solve_all(&p, &settings, corner.max(p.r_report))?;
    let part = match s.part.unwrap_or(if is_plane {
        Part::Total
    } else {
        Part::Solution
    }) {
        Part::Total => FieldPart::Total,
        Part::Solution => FieldPart::Solution,
    };
    let grid = Grid::square(extent, res);
    let fg = field_grid(&p, &sols, &grid, part)?;
    let bytes = match format(s, Format::Csv, &[Format::Csv, Format::Pgm])? {
        Format::Pgm => {
            let mut values = Vec::with_capacity(res * res);
            for iy in (0..res).rev() {
                for ix in 0..res {
                    values.push(fg.at(ix, iy).norm());
                }
            }
            output::pgm(prov, res, res, &values)
        }
        _ => {
            let mut rows = Vec::with_capacity(res * res);
            for iy in 0..res {
                for ix in 0..res {
                    let u = fg.at(ix, iy);
                    rows.push(vec![
                        float(grid.x(ix)),
                        float(grid.y(iy)),
                        float(u.re),
                        float(u.im),
                        float(u.norm()),
                    ]);
                }
            }
            output::csv(prov, &["x", "y", "re_u", "im_u", "abs_u"], &rows)
                .map_err(Failure::Usage)?
        }
    };
    Ok((bytes, None))
}
