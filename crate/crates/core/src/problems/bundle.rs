//! Flat CSV bundle for [`PhaseRetrievalData`].
//!
//! ```text
//! # nhota phase-retrieval bundle v1
//! meta,<key>,<value>      n, m, seed, noise_scale, lambda, a_variance
//! a,<i>,<a_i0>,...        one line per measurement row, i = 0..m
//! y,<i>,<y_i>
//! noise,<i>,<n_i>
//! z,<j>,<z_j>
//! x0,<j>,<x0_j>
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! bits, so an imported bundle replays a run exactly.

use std::io::{BufRead, Write};

use crate::error::{NhotaError, Result};
use crate::problem::{Matrix, Vector};

use super::phase_retrieval::{PhaseParams, PhaseRetrievalData};

const HEADER: &str = "# nhota phase-retrieval bundle v1";

fn io_err(e: std::io::Error) -> NhotaError {
    NhotaError::InvalidArgument(format!("bundle i/o: {e}"))
}

pub fn write_bundle<W: Write>(data: &PhaseRetrievalData, mut out: W) -> Result<()> {
    let p = &data.params;
    let mut text = String::new();
    text.push_str(HEADER);
    text.push('\n');
    text.push_str(&format!("meta,n,{}\n", data.n()));
    text.push_str(&format!("meta,m,{}\n", data.m()));
    text.push_str(&format!("meta,seed,{}\n", p.seed));
    text.push_str(&format!("meta,noise_scale,{:e}\n", p.noise_scale));
    text.push_str(&format!("meta,lambda,{:e}\n", p.lambda));
    text.push_str(&format!("meta,a_variance,{:e}\n", p.a_variance));
    for (i, row) in data.a.row_iter().enumerate() {
        text.push_str(&format!("a,{i}"));
        for v in row.iter() {
            text.push_str(&format!(",{v:e}"));
        }
        text.push('\n');
    }
    for (tag, vec) in [
        ("y", &data.y),
        ("noise", &data.noise),
        ("z", &data.z),
        ("x0", &data.x0),
    ] {
        for (i, v) in vec.iter().enumerate() {
            text.push_str(&format!("{tag},{i},{v:e}\n"));
        }
    }
    out.write_all(text.as_bytes()).map_err(io_err)
}

pub fn read_bundle<R: BufRead>(input: R) -> Result<PhaseRetrievalData> {
    let bad =
        |line: usize, msg: &str| NhotaError::InvalidArgument(format!("bundle line {line}: {msg}"));
    let mut n = None;
    let mut m = None;
    let mut seed = None;
    let mut noise_scale = None;
    let mut lambda = None;
    let mut a_variance = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut vecs: [Vec<(usize, f64)>; 4] = Default::default();

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(bad(lineno, "too few fields"));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad(lineno, "bad float"));
        let index = |s: &str| s.parse::<usize>().map_err(|_| bad(lineno, "bad index"));
        match fields[0] {
            "meta" => match fields[1] {
                "n" => n = Some(index(fields[2])?),
                "m" => m = Some(index(fields[2])?),
                "seed" => {
                    seed = Some(
                        fields[2]
                            .parse::<u64>()
                            .map_err(|_| bad(lineno, "bad seed"))?,
                    )
                }
                "noise_scale" => noise_scale = Some(float(fields[2])?),
                "lambda" => lambda = Some(float(fields[2])?),
                "a_variance" => a_variance = Some(float(fields[2])?),
                other => return Err(bad(lineno, &format!("unknown meta key `{other}`"))),
            },
            "a" => {
                let values = fields[2..]
                    .iter()
                    .map(|s| float(s))
                    .collect::<Result<Vec<_>>>()?;
                rows.push((index(fields[1])?, values));
            }
            tag @ ("y" | "noise" | "z" | "x0") => {
                if fields.len() != 3 {
                    return Err(bad(lineno, "expected `tag,index,value`"));
                }
                let slot = ["y", "noise", "z", "x0"]
                    .iter()
                    .position(|t| *t == tag)
                    .unwrap();
                vecs[slot].push((index(fields[1])?, float(fields[2])?));
            }
            other => return Err(bad(lineno, &format!("unknown record `{other}`"))),
        }
    }

    let missing = |k: &str| NhotaError::InvalidArgument(format!("bundle missing meta `{k}`"));
    let n = n.ok_or_else(|| missing("n"))?;
    let m = m.ok_or_else(|| missing("m"))?;
    let params = PhaseParams {
        n,
        m,
        seed: seed.ok_or_else(|| missing("seed"))?,
        noise_scale: noise_scale.ok_or_else(|| missing("noise_scale"))?,
        lambda: lambda.ok_or_else(|| missing("lambda"))?,
        a_variance: a_variance.ok_or_else(|| missing("a_variance"))?,
    };

    if rows.len() != m {
        return Err(NhotaError::InvalidArgument(format!(
            "bundle has {} rows of A, expected {m}",
            rows.len()
        )));
    }
    let mut a = Matrix::zeros(m, n);
    let mut seen = vec![false; m];
    for (i, values) in rows {
        if i >= m || seen[i] || values.len() != n {
            return Err(NhotaError::InvalidArgument(format!(
                "bundle row {i} of A is malformed"
            )));
        }
        seen[i] = true;
        for (j, v) in values.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }

    let assemble = |entries: &[(usize, f64)], len: usize, name: &str| -> Result<Vector> {
        let mut v = Vector::from_element(len, f64::NAN);
        if entries.len() != len {
            return Err(NhotaError::InvalidArgument(format!(
                "bundle vector `{name}` has wrong length"
            )));
        }
        for &(i, x) in entries {
            if i >= len || !v[i].is_nan() {
                return Err(NhotaError::InvalidArgument(format!(
                    "bundle vector `{name}` has bad index {i}"
                )));
            }
            v[i] = x;
        }
        Ok(v)
    };
    Ok(PhaseRetrievalData {
        params,
        a,
        y: assemble(&vecs[0], m, "y")?,
        noise: assemble(&vecs[1], m, "noise")?,
        z: assemble(&vecs[2], n, "z")?,
        x0: assemble(&vecs[3], n, "x0")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_phase_retrieval, PhaseParams};

    #[test]
    fn bundle_round_trip_is_exact() {
        let inst = gen_phase_retrieval(PhaseParams::new(4, 12, 77).noise_scale(5.0)).unwrap();
        let mut buf = Vec::new();
        write_bundle(&inst.data, &mut buf).unwrap();
        let back = read_bundle(buf.as_slice()).unwrap();
        assert_eq!(back, *inst.data);
    }

    #[test]
    fn truncated_bundle_is_rejected() {
        let inst = gen_phase_retrieval(PhaseParams::new(3, 5, 1)).unwrap();
        let mut buf = Vec::new();
        write_bundle(&inst.data, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text
            .lines()
            .filter(|l| !l.starts_with("y,4"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(read_bundle(cut.as_bytes()).is_err());
        assert!(read_bundle("meta,n,3\nbogus,1,2\n".as_bytes()).is_err());
    }
}
