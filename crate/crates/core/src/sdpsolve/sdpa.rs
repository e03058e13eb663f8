//! SDPA sparse text format.
//!
//! ```text
//! * comment lines start with '*' or '"'
//! * objective_offset 1
//! <m>                      number of decision variables
//! <nblocks>
//! <size_1> ... <size_k>    negative sizes are diagonal (LP) blocks
//! <c_1> ... <c_m>
//! <matno> <blkno> <i> <j> <value>     1-based, upper triangle, matno 0 is F0
//! ```
//!
//! SDPA reads `Σ_i F_i y_i - F0 ⪰ 0`, so a block `M0 + Σ y_i M_i` is written
//! with `F0 = -M0`. Equalities `a·y = b` go into a trailing diagonal block as
//! the pair of rows `a·y - b ≥ 0` and `-a·y + b ≥ 0`; the reader merges such
//! pairs back into equalities. Diagonal entries that do not pair up become
//! 1×1 blocks. The objective offset is carried by the comment line only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Block, SdpInstance, SparseSym};
use crate::{Error, Result};

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:e}")
    }
}

pub fn write_sdpa(inst: &SdpInstance) -> String {
    let mut out = String::new();
    let has_lp = !inst.a.is_empty();
    let nblocks = inst.blocks.len() + usize::from(has_lp);
    let _ = writeln!(out, "* mucert SDP instance: minimize c.y subject to sum_i F_i y_i - F0 >= 0");
    let _ = writeln!(out, "* objective_offset {}", num(inst.offset));
    let _ = writeln!(out, "{}", inst.n);
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = inst.blocks.iter().map(|b| b.dim.to_string()).collect();
    if has_lp {
        sizes.push(format!("-{}", 2 * inst.a.len()));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = inst.c.iter().map(|&v| num(v)).collect();
    let _ = writeln!(out, "{}", c.join(" "));

    for (k, blk) in inst.blocks.iter().enumerate() {
        for &(i, j, v) in &blk.constant.entries {
            if v != 0.0 {
                let _ = writeln!(out, "0 {} {} {} {}", k + 1, i + 1, j + 1, num(-v));
            }
        }
    }
    if has_lp {
        let blk = inst.blocks.len() + 1;
        for (r, &b) in inst.b.iter().enumerate() {
            if b != 0.0 {
                let _ = writeln!(out, "0 {blk} {} {} {}", 2 * r + 1, 2 * r + 1, num(b));
                let _ = writeln!(out, "0 {blk} {} {} {}", 2 * r + 2, 2 * r + 2, num(-b));
            }
        }
    }
    // F_i grouped by variable
    let mut rows_by_var: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.n];
    for (r, row) in inst.a.iter().enumerate() {
        for &(j, v) in row {
            rows_by_var[j].push((r, v));
        }
    }
    for (i, var_rows) in rows_by_var.iter().enumerate() {
        for (k, blk) in inst.blocks.iter().enumerate() {
            for &(a, b, v) in &blk.coeffs[i].entries {
                if v != 0.0 {
                    let _ = writeln!(out, "{} {} {} {} {}", i + 1, k + 1, a + 1, b + 1, num(v));
                }
            }
        }
        let blk = inst.blocks.len() + 1;
        for &(r, v) in var_rows {
            if v != 0.0 {
                let _ = writeln!(out, "{} {blk} {} {} {}", i + 1, 2 * r + 1, 2 * r + 1, num(v));
                let _ = writeln!(out, "{} {blk} {} {} {}", i + 1, 2 * r + 2, 2 * r + 2, num(-v));
            }
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Sdpa(msg.into())
}

/// Constant and per-variable coefficients of one diagonal position.
type DiagSlot = (f64, BTreeMap<usize, f64>);

pub fn read_sdpa(text: &str) -> Result<SdpInstance> {
    let mut offset = 0.0;
    let mut body = String::new();
    for line in text.lines() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix('*').or_else(|| t.strip_prefix('"')) {
            let mut parts = rest.split_whitespace();
            if parts.next() == Some("objective_offset") {
                offset = parts
                    .next()
                    .ok_or_else(|| bad("objective_offset without value"))?
                    .parse()
                    .map_err(|_| bad("bad objective_offset"))?;
            }
            continue;
        }
        body.push_str(line);
        body.push('\n');
    }
    let cleaned: String = body
        .chars()
        .map(|ch| if matches!(ch, ',' | '{' | '}' | '(' | ')') { ' ' } else { ch })
        .collect();
    let mut lines = cleaned.lines().filter(|l| !l.trim().is_empty());
    let mut header = |what: &str| lines.next().ok_or_else(|| bad(format!("unexpected end of input reading {what}")));
    // header lines may carry trailing annotations such as `=mdim`
    let first = |line: &str, what: &str| -> Result<i64> {
        line.split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(format!("bad {what}")))
    };
    let m = usize::try_from(first(header("m")?, "variable count")?).map_err(|_| bad("negative variable count"))?;
    let nblocks = usize::try_from(first(header("nblocks")?, "block count")?).map_err(|_| bad("negative block count"))?;
    let sizes: Vec<i64> = header("block sizes")?
        .split_whitespace()
        .take(nblocks)
        .map(|t| t.parse::<i64>().map_err(|_| bad(format!("bad block size `{t}`"))))
        .collect::<Result<_>>()?;
    if sizes.len() != nblocks || sizes.contains(&0) {
        return Err(bad("block sizes do not match the block count"));
    }
    let mut c = Vec::with_capacity(m);
    while c.len() < m {
        for t in header("objective")?.split_whitespace() {
            if c.len() < m {
                c.push(parse_f64(t)?);
            }
        }
    }
    let rest: Vec<&str> = lines.collect();
    let mut tok = rest.iter().flat_map(|l| l.split_whitespace());

    let mut psd: Vec<Option<(SparseSym, Vec<SparseSym>)>> = sizes
        .iter()
        .map(|&s| (s > 0).then(|| (SparseSym::new(), vec![SparseSym::new(); m])))
        .collect();
    // diagonal blocks: position -> (F0 value, var -> coefficient)
    let mut diag: Vec<BTreeMap<usize, DiagSlot>> = vec![BTreeMap::new(); nblocks];

    while let Some(first) = tok.next() {
        let matno: usize = first.parse().map_err(|_| bad(format!("bad matrix number `{first}`")))?;
        let blk: usize = tok
            .next()
            .ok_or_else(|| bad("truncated entry"))?
            .parse()
            .map_err(|_| bad("bad block number"))?;
        let i: usize = tok
            .next()
            .ok_or_else(|| bad("truncated entry"))?
            .parse()
            .map_err(|_| bad("bad row index"))?;
        let j: usize = tok
            .next()
            .ok_or_else(|| bad("truncated entry"))?
            .parse()
            .map_err(|_| bad("bad column index"))?;
        let v = parse_f64(tok.next().ok_or_else(|| bad("truncated entry"))?)?;
        if matno > m {
            return Err(bad(format!("matrix number {matno} exceeds {m}")));
        }
        if blk == 0 || blk > nblocks {
            return Err(bad(format!("block number {blk} out of range")));
        }
        let size = sizes[blk - 1].unsigned_abs() as usize;
        if i == 0 || j == 0 || i > size || j > size {
            return Err(bad(format!("entry ({i},{j}) outside block {blk} of size {size}")));
        }
        match &mut psd[blk - 1] {
            Some((f0, fs)) => {
                if matno == 0 {
                    f0.push(i - 1, j - 1, -v);
                } else {
                    fs[matno - 1].push(i - 1, j - 1, v);
                }
            }
            None => {
                if i != j {
                    return Err(bad(format!("off-diagonal entry in diagonal block {blk}")));
                }
                let slot = diag[blk - 1].entry(i - 1).or_default();
                if matno == 0 {
                    slot.0 += v;
                } else {
                    *slot.1.entry(matno - 1).or_default() += v;
                }
            }
        }
    }

    let mut blocks = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (k, &s) in sizes.iter().enumerate() {
        if let Some((constant, coeffs)) = psd[k].take() {
            blocks.push(Block {
                dim: s as usize,
                constant,
                coeffs,
            });
            continue;
        }
        let size = s.unsigned_abs() as usize;
        let get = |p: usize| diag[k].get(&p).cloned().unwrap_or_default();
        let mut p = 0;
        while p < size {
            let (f0, row) = get(p);
            if p + 1 < size {
                let (g0, other) = get(p + 1);
                let negated = g0 == -f0 && row.len() == other.len() && row.iter().all(|(j, v)| other.get(j) == Some(&-v));
                if negated && !row.is_empty() {
                    a.push(row.into_iter().collect());
                    b.push(f0);
                    p += 2;
                    continue;
                }
            }
            let mut coeffs = vec![SparseSym::new(); m];
            for (j, v) in row {
                coeffs[j].push(0, 0, v);
            }
            let mut constant = SparseSym::new();
            if f0 != 0.0 {
                constant.push(0, 0, -f0);
            }
            blocks.push(Block { dim: 1, constant, coeffs });
            p += 1;
        }
    }
    let inst = SdpInstance {
        n: m,
        c,
        offset,
        a,
        b,
        blocks,
    };
    inst.validate()?;
    Ok(inst)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| bad(format!("bad number `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_system, ConstellationSpec};
    use crate::lasserre::build_relaxation;
    use crate::sdpsolve::{solve, SolverOptions};

    const SAMPLE: &str = "\
\"a small example
2 =mdim
2 =nblocks
{2, -1}
1.0 1.0
0 1 1 2 -1
1 1 1 1 1
2 1 2 2 1
1 2 1 1 1
";

    #[test]
    fn reads_sample() {
        let inst = read_sdpa(SAMPLE).unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(inst.n, 2);
        assert_eq!(inst.blocks.len(), 2);
        assert_eq!(inst.blocks[0].constant.entries, vec![(0, 1, 1.0)]);
        let sol = solve(&inst, &SolverOptions::default()).unwrap();
        assert!((sol.primal_objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn layout_of_written_file() {
        let sys = build_system(&ConstellationSpec::new(2, vec![1, 1, 1, 1]).unwrap());
        let inst = build_relaxation(&sys, 0, 2).unwrap().to_sdp();
        let text = write_sdpa(&inst);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with('*'));
        assert_eq!(lines[1], "* objective_offset 1");
        assert_eq!(lines[2], "69");
        assert_eq!(lines[3], "2");
        assert_eq!(lines[4], format!("15 -{}", 2 * inst.a.len()));
        assert_eq!(lines[5].split_whitespace().count(), 69);
        assert_eq!(lines[6], "0 1 1 1 -1");
        for l in &lines[6..] {
            let f: Vec<&str> = l.split_whitespace().collect();
            assert_eq!(f.len(), 5);
            let (i, j): (usize, usize) = (f[2].parse().unwrap(), f[3].parse().unwrap());
            assert!(i <= j);
        }
    }

    #[test]
    fn round_trip() {
        let sys = build_system(&ConstellationSpec::new(2, vec![1, 1, 1, 1]).unwrap());
        let inst = build_relaxation(&sys, 0, 3).unwrap().to_sdp();
        let back = read_sdpa(&write_sdpa(&inst)).unwrap();
        assert_eq!(back.n, inst.n);
        assert_eq!(back.c, inst.c);
        assert_eq!(back.offset, inst.offset);
        assert_eq!(back.a, inst.a);
        assert_eq!(back.b, inst.b);
        assert_eq!(back.blocks, inst.blocks);
    }

    #[test]
    fn unpaired_diagonal_entries_become_scalar_blocks() {
        let text = "1\n1\n-2\n1\n1 1 1 1 1\n1 1 2 2 2\n0 1 2 2 1\n";
        let inst = read_sdpa(text).unwrap();
        assert!(inst.a.is_empty());
        assert_eq!(inst.blocks.len(), 2);
        // minimize y subject to y ≥ 0 and 2y ≥ 1
        let sol = solve(&inst, &SolverOptions::default()).unwrap();
        assert!((sol.primal_objective - 0.5).abs() < 1e-6);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_sdpa("").is_err());
        assert!(read_sdpa("1\n1\n2\n1\n1 1 3 3 1\n").is_err());
        assert!(read_sdpa("1\n1\n2\n1\n2 1 1 1 1\n").is_err());
        assert!(read_sdpa("1\n1\n2\n1\n1 1 1\n").is_err());
        assert!(read_sdpa("1\n1\n-2\n1\n1 1 1 2 1\n").is_err());
    }
}
