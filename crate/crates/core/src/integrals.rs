//! Molecular integral data and FCIDUMP input/output.
//!
//! The electronic-structure problem arrives as a Molpro-style FCIDUMP
//! file: a small namelist header (`NORB`, `NELEC`, `MS2`) followed by
//! records `value i j k l` holding the core energy (all indices zero),
//! the one-body integrals `h[i][j]` (`k = l = 0`), and the two-body
//! repulsion integrals `(ij|kl)` in chemist notation with the usual
//! eight-fold permutational symmetry.  Indices in the file are 1-based.
//!
//! Spin orbitals use blocked ordering throughout the crate: spatial
//! orbital `p` with alpha spin is spin orbital `p`, with beta spin it is
//! `norb + p`.  Qubit `q` of the simulator register corresponds to spin
//! orbital `q`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CqeError, Result};

/// One- and two-electron integrals for a small molecular Hamiltonian.
///
/// `h` is the symmetric `norb x norb` core-Hamiltonian matrix and `eri`
/// the chemist-notation `(ij|kl)` tensor stored dense with all eight
/// symmetry images filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    norb: usize,
    nelec: usize,
    ms2: i32,
    e_core: f64,
    h: Vec<f64>,
    eri: Vec<f64>,
}

impl MolecularIntegrals {
    /// Builds an empty integral set after validating the counts.
    pub fn new(norb: usize, nelec: usize, ms2: i32) -> Result<Self> {
        if norb == 0 {
            return Err(CqeError::Invalid("NORB must be at least 1".into()));
        }
        if norb > 16 {
            return Err(CqeError::Invalid(format!(
                "NORB={norb} needs {} qubits; at most 32 are supported",
                2 * norb
            )));
        }
        if nelec > 2 * norb {
            return Err(CqeError::Invalid(format!(
                "NELEC={nelec} does not fit in {norb} spatial orbitals"
            )));
        }
        let nelec_i = nelec as i32;
        if (nelec_i - ms2) % 2 != 0 {
            return Err(CqeError::Invalid(format!(
                "NELEC={nelec} and MS2={ms2} have mismatched parity"
            )));
        }
        let na = (nelec_i + ms2) / 2;
        let nb = (nelec_i - ms2) / 2;
        if na < 0 || nb < 0 || na as usize > norb || nb as usize > norb {
            return Err(CqeError::Invalid(format!(
                "NELEC={nelec}, MS2={ms2} gives occupations alpha={na}, beta={nb} \
                 outside [0, {norb}]"
            )));
        }
        Ok(Self {
            norb,
            nelec,
            ms2,
            e_core: 0.0,
            h: vec![0.0; norb * norb],
            eri: vec![0.0; norb * norb * norb * norb],
        })
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn nelec(&self) -> usize {
        self.nelec
    }

    pub fn ms2(&self) -> i32 {
        self.ms2
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    pub fn set_e_core(&mut self, value: f64) {
        self.e_core = value;
    }

    /// Number of qubits used by the simulator register (one per spin orbital).
    pub fn n_qubits(&self) -> usize {
        2 * self.norb
    }

    pub fn n_alpha(&self) -> usize {
        ((self.nelec as i32 + self.ms2) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.nelec as i32 - self.ms2) / 2) as usize
    }

    /// One-body integral `h[p][q]` over spatial orbitals.
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.norb + q]
    }

    /// Sets `h[p][q]` and its transpose image.
    pub fn set_h(&mut self, p: usize, q: usize, value: f64) {
        self.h[p * self.norb + q] = value;
        self.h[q * self.norb + p] = value;
    }

    /// Chemist-notation two-body integral `(pq|rs)` over spatial orbitals.
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.norb;
        self.eri[((p * n + q) * n + r) * n + s]
    }

    /// Sets `(pq|rs)` together with all eight symmetry-equivalent entries.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let n = self.norb;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.eri[((a * n + b) * n + c) * n + d] = value;
        }
    }

    /// One-body integral over blocked spin orbitals (zero across spins).
    pub fn one_body_so(&self, p: usize, q: usize) -> f64 {
        if p / self.norb == q / self.norb {
            self.h(p % self.norb, q % self.norb)
        } else {
            0.0
        }
    }

    /// Physicist-notation `<pq|rs>` over blocked spin orbitals: the
    /// chemist integral `(pr|qs)` gated by spin conservation.
    pub fn eri_phys_so(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let m = self.norb;
        if p / m == r / m && q / m == s / m {
            self.eri(p % m, r % m, q % m, s % m)
        } else {
            0.0
        }
    }

    /// Occupation bitmask of the reference determinant: the lowest
    /// `n_alpha` alpha spin orbitals and lowest `n_beta` beta spin
    /// orbitals (bit `q` set means spin orbital `q` occupied).
    pub fn reference_determinant(&self) -> u64 {
        let alpha = (1u64 << self.n_alpha()) - 1;
        let beta = ((1u64 << self.n_beta()) - 1) << self.norb;
        alpha | beta
    }

    /// Parses FCIDUMP text.
    pub fn from_fcidump_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut header = String::new();
        let mut body_start = 0;
        for (idx, line) in &mut lines {
            let done = {
                let upper = line.to_ascii_uppercase();
                upper.contains("&END") || upper.trim_start().starts_with('/')
            };
            header.push(' ');
            header.push_str(line);
            if done {
                body_start = idx + 1;
                break;
            }
        }
        let header = header.to_ascii_uppercase();
        if !header.contains("&FCI") {
            return Err(CqeError::Parse {
                line: 1,
                message: "missing &FCI namelist header".into(),
            });
        }
        let norb: usize = header_value(&header, "NORB")?;
        let nelec: usize = header_value(&header, "NELEC")?;
        let ms2: i32 = header_value(&header, "MS2")?;
        let mut out = Self::new(norb, nelec, ms2)?;

        for (idx, line) in text.lines().enumerate().skip(body_start) {
            let line_no = idx + 1;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            if tokens.len() != 5 {
                return Err(CqeError::Parse {
                    line: line_no,
                    message: format!("expected `value i j k l`, found {} fields", tokens.len()),
                });
            }
            let value: f64 = tokens[0]
                .replace(['D', 'd'], "E")
                .parse()
                .map_err(|_| CqeError::Parse {
                    line: line_no,
                    message: format!("bad value `{}`", tokens[0]),
                })?;
            let mut ix = [0usize; 4];
            for (slot, tok) in ix.iter_mut().zip(&tokens[1..]) {
                *slot = tok.parse().map_err(|_| CqeError::Parse {
                    line: line_no,
                    message: format!("bad index `{tok}`"),
                })?;
            }
            let [i, j, k, l] = ix;
            let norb = out.norb;
            let check = |idx: usize| -> Result<usize> {
                if idx == 0 || idx > norb {
                    Err(CqeError::Parse {
                        line: line_no,
                        message: format!("orbital index {idx} out of range 1..={norb}"),
                    })
                } else {
                    Ok(idx - 1)
                }
            };
            if i == 0 && j == 0 && k == 0 && l == 0 {
                out.e_core = value;
            } else if k == 0 && l == 0 {
                if j == 0 {
                    return Err(CqeError::Parse {
                        line: line_no,
                        message: "one-body record needs two orbital indices".into(),
                    });
                }
                out.set_h(check(i)?, check(j)?, value);
            } else {
                out.set_eri(check(i)?, check(j)?, check(k)?, check(l)?, value);
            }
        }
        Ok(out)
    }

    /// Loads an FCIDUMP file from disk.
    pub fn load_fcidump<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_fcidump_str(&text)
    }

    /// Serializes back to FCIDUMP text, writing one entry per symmetry
    /// class in canonical triangle order.
    pub fn to_fcidump_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "&FCI NORB={},NELEC={},MS2={},",
            self.norb, self.nelec, self.ms2
        );
        let _ = writeln!(out, "  ORBSYM={}", "1,".repeat(self.norb));
        let _ = writeln!(out, "  ISYM=1,");
        let _ = writeln!(out, "&END");
        for p in 0..self.norb {
            for q in 0..=p {
                for r in 0..=p {
                    let smax = if r == p { q } else { r };
                    for s in 0..=smax {
                        let v = self.eri(p, q, r, s);
                        if v.abs() > 1e-14 {
                            let _ = writeln!(
                                out,
                                "{v:24.16E} {:3} {:3} {:3} {:3}",
                                p + 1,
                                q + 1,
                                r + 1,
                                s + 1
                            );
                        }
                    }
                }
            }
        }
        for p in 0..self.norb {
            for q in 0..=p {
                let v = self.h(p, q);
                if v.abs() > 1e-14 {
                    let _ = writeln!(out, "{v:24.16E} {:3} {:3}   0   0", p + 1, q + 1);
                }
            }
        }
        let _ = writeln!(out, "{:24.16E}   0   0   0   0", self.e_core);
        out
    }
}

fn header_value<T: std::str::FromStr>(header: &str, key: &str) -> Result<T> {
    let pos = header.find(key).ok_or_else(|| CqeError::Parse {
        line: 1,
        message: format!("header is missing {key}"),
    })?;
    let rest = &header[pos + key.len()..];
    let rest = rest.trim_start();
    let rest = rest.strip_prefix('=').ok_or_else(|| CqeError::Parse {
        line: 1,
        message: format!("expected `=` after {key}"),
    })?;
    let token: String = rest
        .trim_start()
        .chars()
        .take_while(|c| !c.is_whitespace() && *c != ',')
        .collect();
    token.parse().map_err(|_| CqeError::Parse {
        line: 1,
        message: format!("bad value `{token}` for {key}"),
    })
}
