//! Digit-by-digit proofs of decimal arithmetic facts.

use mmprove_core::ProofTree;

use crate::builder::ProofBuilder;
use crate::GenError;

type R = Result<ProofTree, GenError>;

/// Decimal numeral text: digits below ten, `; prefix last` above.
pub fn numeral(n: u128) -> String {
    if n < 10 {
        n.to_string()
    } else {
        format!("; {} {}", numeral(n / 10), n % 10)
    }
}

/// Signed numeral text; negatives are written `-u n`.
pub fn signed(n: i128) -> String {
    if n < 0 {
        format!("-u {}", numeral(n.unsigned_abs()))
    } else {
        numeral(n as u128)
    }
}

fn len(n: u128) -> usize {
    if n < 10 {
        1
    } else {
        1 + len(n / 10)
    }
}

pub struct Decimal<'p, 'a> {
    pub b: &'p mut ProofBuilder<'a>,
}

macro_rules! memo {
    ($self:ident, $stmt:expr) => {
        let stmt = $stmt;
        if let Some(t) = $self.b.cached(&stmt) {
            return Ok(t);
        }
    };
}

impl<'p, 'a> Decimal<'p, 'a> {
    pub fn new(b: &'p mut ProofBuilder<'a>) -> Self {
        Decimal { b }
    }

    fn fact(&mut self, label: &str) -> R {
        self.b.apply(label, &[], vec![])
    }

    /// `|- n e. NN0`
    pub fn nn0(&mut self, n: u128) -> R {
        if n < 10 {
            return self.fact(&format!("{n}nn0"));
        }
        memo!(self, format!("|- {} e. NN0", numeral(n)));
        let kids = vec![self.nn0(n / 10)?, self.nn0(n % 10)?];
        self.b.apply("deccl", &[("A", &numeral(n / 10)), ("B", &numeral(n % 10))], kids)
    }

    /// `|- n e. NN` for n at least 1.
    pub fn nn(&mut self, n: u128) -> R {
        if n < 10 {
            return self.fact(&format!("{n}nn"));
        }
        memo!(self, format!("|- {} e. NN", numeral(n)));
        let hi = numeral(n / 10);
        if n % 10 == 0 {
            let kid = self.nn(n / 10)?;
            self.b.apply("decnncl2", &[("A", &hi)], vec![kid])
        } else {
            let kids = vec![self.nn0(n / 10)?, self.nn(n % 10)?];
            self.b.apply("decnncl", &[("A", &hi), ("B", &numeral(n % 10))], kids)
        }
    }

    /// `|- n e. CC`
    pub fn cn(&mut self, n: i128) -> R {
        let m = n.unsigned_abs();
        if n < 0 {
            let kid = self.cn(m as i128)?;
            return self.b.apply("negcli", &[("A", &numeral(m))], vec![kid]);
        }
        if m < 10 {
            return self.fact(&format!("{m}cn"));
        }
        let kid = self.nn0(m)?;
        self.b.apply("nn0cni", &[("A", &numeral(m))], vec![kid])
    }

    /// `|- ( a + b ) = c`
    pub fn add(&mut self, a: u128, b: u128) -> R {
        if a < 10 && b < 10 {
            return self.fact(&format!("{a}p{b}e{}", a + b));
        }
        let (na, nb, nc) = (numeral(a), numeral(b), numeral(a + b));
        memo!(self, format!("|- ( {na} + {nb} ) = {nc}"));
        if b == 0 {
            let kid = self.cn(a as i128)?;
            return self.b.apply("addid1i", &[("A", &na)], vec![kid]);
        }
        if a == 0 {
            let kid = self.cn(b as i128)?;
            return self.b.apply("addid2i", &[("A", &nb)], vec![kid]);
        }
        if len(a) < len(b) {
            let kids = vec![self.cn(b as i128)?, self.cn(a as i128)?, self.add(b, a)?];
            return self.b.apply("addcomli", &[("A", &nb), ("B", &na), ("C", &nc)], kids);
        }
        let (hi, lo) = (a / 10, a % 10);
        if b < 10 {
            let mut kids = vec![self.nn0(hi)?, self.nn0(lo)?, self.nn0(b)?];
            let (nh, nl) = (numeral(hi), numeral(lo));
            if lo + b < 10 {
                kids.push(self.add(lo, b)?);
                return self.b.apply(
                    "decaddi",
                    &[("A", &nh), ("B", &nl), ("N", &nb), ("C", &numeral(lo + b))],
                    kids,
                );
            }
            kids.push(self.add(hi, 1)?);
            kids.push(self.add(lo, b)?);
            return self.b.apply(
                "decaddci",
                &[("A", &nh), ("B", &nl), ("N", &nb), ("C", &numeral(lo + b - 10)), ("D", &numeral(hi + 1))],
                kids,
            );
        }
        let (chi, clo) = (b / 10, b % 10);
        let names = [numeral(hi), numeral(lo), numeral(chi), numeral(clo)];
        let mut kids = vec![self.nn0(hi)?, self.nn0(lo)?, self.nn0(chi)?, self.nn0(clo)?];
        if lo + clo < 10 {
            kids.push(self.add(hi, chi)?);
            kids.push(self.add(lo, clo)?);
            self.quad("decadd", &names, &numeral(hi + chi), &numeral(lo + clo), kids)
        } else {
            kids.push(self.add1(hi, chi)?);
            kids.push(self.add(lo, clo)?);
            self.quad("decaddc", &names, &numeral(hi + chi + 1), &numeral(lo + clo - 10), kids)
        }
    }

    fn quad(&mut self, label: &str, n: &[String; 4], e: &str, f: &str, kids: Vec<ProofTree>) -> R {
        self.b.apply(
            label,
            &[("A", &n[0]), ("B", &n[1]), ("C", &n[2]), ("D", &n[3]), ("E", e), ("F", f)],
            kids,
        )
    }

    /// `|- ( ( a + c ) + 1 ) = d` where `a` has at least as many digits as `c`.
    pub fn add1(&mut self, a: u128, c: u128) -> R {
        if a < 10 && c < 10 {
            return self.fact(&format!("{a}p{c}p1e{}", a + c + 1));
        }
        let (na, nc) = (numeral(a), numeral(c));
        memo!(self, format!("|- ( ( {na} + {nc} ) + 1 ) = {}", numeral(a + c + 1)));
        if len(a) < len(c) {
            return Err(GenError::Step {
                label: "add1".into(),
                msg: format!("left operand {a} shorter than {c}"),
            });
        }
        let (hi, lo) = (a / 10, a % 10);
        if c < 10 {
            let (nh, nl) = (numeral(hi), numeral(lo));
            let mut kids = vec![self.nn0(hi)?, self.nn0(lo)?, self.nn0(c)?];
            if lo + c + 1 < 10 {
                kids.push(self.add1(lo, c)?);
                return self.b.apply(
                    "decaddi1",
                    &[("A", &nh), ("B", &nl), ("N", &nc), ("C", &numeral(lo + c + 1))],
                    kids,
                );
            }
            kids.push(self.add(hi, 1)?);
            kids.push(self.add1(lo, c)?);
            return self.b.apply(
                "decaddci1",
                &[("A", &nh), ("B", &nl), ("N", &nc), ("C", &numeral(lo + c + 1 - 10)), ("D", &numeral(hi + 1))],
                kids,
            );
        }
        let (chi, clo) = (c / 10, c % 10);
        let names = [numeral(hi), numeral(lo), numeral(chi), numeral(clo)];
        let mut kids = vec![self.nn0(hi)?, self.nn0(lo)?, self.nn0(chi)?, self.nn0(clo)?];
        if lo + clo + 1 < 10 {
            kids.push(self.add(hi, chi)?);
            kids.push(self.add1(lo, clo)?);
            self.quad("decadd1", &names, &numeral(hi + chi), &numeral(lo + clo + 1), kids)
        } else {
            kids.push(self.add1(hi, chi)?);
            kids.push(self.add1(lo, clo)?);
            self.quad("decaddc1", &names, &numeral(hi + chi + 1), &numeral(lo + clo + 1 - 10), kids)
        }
    }

    /// `|- ( a x. p ) = c` for a digit `p`.
    pub fn mul_digit(&mut self, a: u128, p: u128) -> R {
        if a < 10 {
            return self.fact(&format!("{a}t{p}e{}", a * p));
        }
        let (na, np) = (numeral(a), numeral(p));
        memo!(self, format!("|- ( {na} x. {np} ) = {}", numeral(a * p)));
        if p == 0 {
            let kid = self.cn(a as i128)?;
            return self.b.apply("mul01i", &[("A", &na)], vec![kid]);
        }
        if p == 1 {
            let kid = self.cn(a as i128)?;
            return self.b.apply("mulid1i", &[("A", &na)], vec![kid]);
        }
        let (hi, lo) = (a / 10, a % 10);
        let carry = lo * p / 10;
        let mut kids = vec![self.nn0(hi)?, self.nn0(lo)?, self.nn0(p)?];
        let (nh, nl) = (numeral(hi), numeral(lo));
        if carry == 0 {
            kids.push(self.mul_digit(hi, p)?);
            kids.push(self.mul_digit(lo, p)?);
            self.b.apply(
                "decmul1",
                &[("A", &nh), ("B", &nl), ("P", &np), ("E", &numeral(hi * p)), ("F", &numeral(lo * p))],
                kids,
            )
        } else {
            kids.push(self.mul_add(hi, p, carry)?);
            kids.push(self.mul_digit(lo, p)?);
            self.b.apply(
                "decmul1c",
                &[
                    ("A", &nh),
                    ("B", &nl),
                    ("P", &np),
                    ("G", &numeral(carry)),
                    ("E", &numeral(hi * p + carry)),
                    ("F", &numeral(lo * p % 10)),
                ],
                kids,
            )
        }
    }

    /// `|- ( ( a x. p ) + k ) = c` for a digit `p`.
    pub fn mul_add(&mut self, a: u128, p: u128, k: u128) -> R {
        let (na, np, nk) = (numeral(a), numeral(p), numeral(k));
        memo!(self, format!("|- ( ( {na} x. {np} ) + {nk} ) = {}", numeral(a * p + k)));
        if a < 10 || p == 0 {
            let m = a * p;
            let prod = format!("( {na} x. {np} )");
            let kid = self.mul_digit(a, p)?;
            let lifted = self.b.apply("oveq1i", &[("A", &prod), ("B", &numeral(m)), ("C", &nk), ("F", "+")], vec![kid])?;
            let sum = self.add(m, k)?;
            return self.b.apply(
                "eqtri",
                &[("A", &format!("( {prod} + {nk} )")), ("B", &format!("( {} + {nk} )", numeral(m))), ("C", &numeral(m + k))],
                vec![lifted, sum],
            );
        }
        let (hi, lo) = (a / 10, a % 10);
        let (nh, nl) = (numeral(hi), numeral(lo));
        if k < 10 {
            let t = lo * p + k;
            let mut kids = vec![self.nn0(hi)?, self.nn0(lo)?, self.nn0(p)?];
            if t < 10 {
                kids.push(self.mul_digit(hi, p)?);
                kids.push(self.mul_add(lo, p, k)?);
                return self.b.apply(
                    "decmad",
                    &[("A", &nh), ("B", &nl), ("P", &np), ("K", &nk), ("E", &numeral(hi * p)), ("F", &numeral(t))],
                    kids,
                );
            }
            kids.push(self.mul_add(hi, p, t / 10)?);
            kids.push(self.mul_add(lo, p, k)?);
            return self.b.apply(
                "decmadc",
                &[
                    ("A", &nh),
                    ("B", &nl),
                    ("P", &np),
                    ("K", &nk),
                    ("G", &numeral(t / 10)),
                    ("E", &numeral(hi * p + t / 10)),
                    ("F", &numeral(t % 10)),
                ],
                kids,
            );
        }
        let (khi, klo) = (k / 10, k % 10);
        let (nkh, nkl) = (numeral(khi), numeral(klo));
        let t = lo * p + klo;
        let mut kids = vec![self.nn0(hi)?, self.nn0(lo)?, self.nn0(khi)?, self.nn0(klo)?, self.nn0(p)?];
        if t < 10 {
            kids.push(self.mul_add(hi, p, khi)?);
            kids.push(self.mul_add(lo, p, klo)?);
            return self.b.apply(
                "decma",
                &[
                    ("A", &nh),
                    ("B", &nl),
                    ("C", &nkh),
                    ("D", &nkl),
                    ("P", &np),
                    ("E", &numeral(hi * p + khi)),
                    ("F", &numeral(t)),
                ],
                kids,
            );
        }
        let g = t / 10;
        kids.push(self.add(khi, g)?);
        kids.push(self.mul_add(hi, p, khi + g)?);
        kids.push(self.mul_add(lo, p, klo)?);
        self.b.apply(
            "decmac",
            &[
                ("A", &nh),
                ("B", &nl),
                ("C", &nkh),
                ("D", &nkl),
                ("P", &np),
                ("G", &numeral(g)),
                ("H", &numeral(khi + g)),
                ("E", &numeral(hi * p + khi + g)),
                ("F", &numeral(t % 10)),
            ],
            kids,
        )
    }

    /// `|- ( a x. b ) = c`
    pub fn mul(&mut self, a: u128, b: u128) -> R {
        if b < 10 {
            return self.mul_digit(a, b);
        }
        let (na, nb) = (numeral(a), numeral(b));
        memo!(self, format!("|- ( {na} x. {nb} ) = {}", numeral(a * b)));
        if a == 0 {
            let kid = self.cn(b as i128)?;
            return self.b.apply("mul02i", &[("A", &nb)], vec![kid]);
        }
        if a < 10 {
            let kids = vec![self.cn(b as i128)?, self.cn(a as i128)?, self.mul_digit(b, a)?];
            return self.b.apply("mulcomli", &[("A", &nb), ("B", &na), ("C", &numeral(a * b))], kids);
        }
        let (hi, lo) = (b / 10, b % 10);
        let e = a * hi;
        let kids = vec![
            self.nn0(a)?,
            self.nn0(hi)?,
            self.nn0(lo)?,
            self.mul(a, hi)?,
            self.mul_add(a, lo, e * 10)?,
        ];
        self.b.apply(
            "decmul2",
            &[("M", &na), ("C", &numeral(hi)), ("D", &numeral(lo)), ("E", &numeral(e)), ("S", &numeral(a * b))],
            kids,
        )
    }

    /// `|- r < b`
    pub fn lt(&mut self, r: u128, b: u128) -> R {
        if r < 10 && b < 10 {
            return self.fact(&format!("{r}lt{b}"));
        }
        if r < 10 && b == 10 {
            return self.fact(&format!("{r}lt10"));
        }
        let (nr, nb) = (numeral(r), numeral(b));
        memo!(self, format!("|- {nr} < {nb}"));
        if r < 10 {
            let kids = vec![self.nn(b / 10)?, self.nn0(b % 10)?, self.nn0(r)?, self.fact(&format!("{r}lt10"))?];
            return self.b.apply("declti", &[("A", &numeral(b / 10)), ("B", &numeral(b % 10)), ("C", &nr)], kids);
        }
        let (a, bb) = (r / 10, r % 10);
        let (c, d) = (b / 10, b % 10);
        if a == c {
            let kids = vec![self.nn0(a)?, self.nn0(bb)?, self.nn0(d)?, self.lt(bb, d)?];
            return self.b.apply("declt", &[("A", &numeral(a)), ("B", &numeral(bb)), ("C", &numeral(d))], kids);
        }
        let kids = vec![
            self.nn0(a)?,
            self.nn0(bb)?,
            self.nn0(c)?,
            self.nn0(d)?,
            self.fact(&format!("{bb}lt10"))?,
            self.lt(a, c)?,
        ];
        self.b.apply(
            "decltc",
            &[("A", &numeral(a)), ("B", &numeral(bb)), ("C", &numeral(c)), ("D", &numeral(d))],
            kids,
        )
    }

    /// `|- ( a + b ) = c` over the integers.
    pub fn signed_add(&mut self, a: i128, b: i128) -> R {
        let (ma, mb) = (a.unsigned_abs(), b.unsigned_abs());
        match (a < 0, b < 0) {
            (false, false) => self.add(ma, mb),
            (true, true) => {
                let kids = vec![self.cn(ma as i128)?, self.cn(mb as i128)?, self.add(ma, mb)?];
                self.b.apply(
                    "addnegnegi",
                    &[("A", &numeral(ma)), ("B", &numeral(mb)), ("C", &numeral(ma + mb))],
                    kids,
                )
            }
            (false, true) if ma >= mb => {
                let c = ma - mb;
                let kids = vec![self.cn(mb as i128)?, self.cn(c as i128)?, self.add(c, mb)?];
                self.b.apply("addnegsubi", &[("A", &numeral(ma)), ("B", &numeral(mb)), ("C", &numeral(c))], kids)
            }
            (false, true) => {
                let c = mb - ma;
                let kids = vec![self.cn(ma as i128)?, self.cn(c as i128)?, self.add(ma, c)?];
                self.b.apply("addnegsub2i", &[("A", &numeral(ma)), ("B", &numeral(mb)), ("C", &numeral(c))], kids)
            }
            (true, false) if mb >= ma => {
                let c = mb - ma;
                let kids = vec![self.cn(ma as i128)?, self.cn(c as i128)?, self.add(c, ma)?];
                self.b.apply("negaddsubi", &[("A", &numeral(ma)), ("B", &numeral(mb)), ("C", &numeral(c))], kids)
            }
            (true, false) => {
                let c = ma - mb;
                let kids = vec![self.cn(mb as i128)?, self.cn(c as i128)?, self.add(mb, c)?];
                self.b.apply("negaddsub2i", &[("A", &numeral(ma)), ("B", &numeral(mb)), ("C", &numeral(c))], kids)
            }
        }
    }

    /// `|- ( a x. b ) = c` over the integers.
    pub fn signed_mul(&mut self, a: i128, b: i128) -> R {
        let (ma, mb) = (a.unsigned_abs(), b.unsigned_abs());
        if a < 0 && b == 0 {
            let kid = self.cn(a)?;
            return self.b.apply("mul01i", &[("A", &signed(a))], vec![kid]);
        }
        if b < 0 && a == 0 {
            let kid = self.cn(b)?;
            return self.b.apply("mul02i", &[("A", &signed(b))], vec![kid]);
        }
        let label = match (a < 0, b < 0) {
            (false, false) => return self.mul(ma, mb),
            (true, false) => "mulneg1eqi",
            (false, true) => "mulneg2eqi",
            (true, true) => "mul2negeqi",
        };
        let kids = vec![self.cn(ma as i128)?, self.cn(mb as i128)?, self.mul(ma, mb)?];
        self.b.apply(label, &[("A", &numeral(ma)), ("B", &numeral(mb)), ("C", &numeral(ma * mb))], kids)
    }

    fn ne0(&mut self, b: u128) -> R {
        let kid = self.nn(b)?;
        self.b.apply("nnne0i", &[("A", &numeral(b))], vec![kid])
    }

    /// `|- ( a / b ) = q` for an exact quotient, translated to `( b x. q ) = a`.
    fn div_nat(&mut self, a: u128, b: u128) -> R {
        let q = a / b;
        let (na, nb, nq) = (numeral(a), numeral(b), numeral(q));
        let product = self.mul(b, q)?;
        let kids = vec![self.cn(a as i128)?, self.cn(b as i128)?, self.cn(q as i128)?, self.ne0(b)?];
        let equiv = self.b.apply("divmuli", &[("A", &na), ("B", &nb), ("C", &nq)], kids)?;
        self.b.apply(
            "mpbir",
            &[("ph", &format!("( {na} / {nb} ) = {nq}")), ("ps", &format!("( {nb} x. {nq} ) = {na}"))],
            vec![product, equiv],
        )
    }

    /// `|- ( a / b ) = q` over the integers; `b` divides `a` and `q` is nonzero.
    pub fn signed_div(&mut self, a: i128, b: i128) -> R {
        let (ma, mb) = (a.unsigned_abs(), b.unsigned_abs());
        if mb == 0 || ma % mb != 0 || ma == 0 {
            return Err(GenError::Step {
                label: "div".into(),
                msg: format!("{a} / {b} is not an exact nonzero quotient"),
            });
        }
        let label = match (a < 0, b < 0) {
            (false, false) => return self.div_nat(ma, mb),
            (true, false) => "divneg1i",
            (false, true) => "divneg2i",
            (true, true) => "div2negi",
        };
        let kids = vec![self.cn(ma as i128)?, self.cn(mb as i128)?, self.ne0(mb)?, self.div_nat(ma, mb)?];
        self.b.apply(label, &[("A", &numeral(ma)), ("B", &numeral(mb)), ("C", &numeral(ma / mb))], kids)
    }

    /// `|- ( a mod b ) = r` for a positive modulus.
    pub fn modulo(&mut self, a: i128, b: u128) -> R {
        let ma = a.unsigned_abs();
        let nb = numeral(b);
        if a >= 0 {
            let (q, r) = (ma / b, ma % b);
            let (nq, nr) = (numeral(q), numeral(r));
            let total = if q < 10 {
                self.mul_add(b, q, r)?
            } else {
                let p = b * q;
                let prod = format!("( {nb} x. {nq} )");
                let kid = self.mul(b, q)?;
                let lifted = self.b.apply("oveq1i", &[("A", &prod), ("B", &numeral(p)), ("C", &nr), ("F", "+")], vec![kid])?;
                let sum = self.add(p, r)?;
                self.b.apply(
                    "eqtri",
                    &[("A", &format!("( {prod} + {nr} )")), ("B", &format!("( {} + {nr} )", numeral(p))), ("C", &numeral(ma))],
                    vec![lifted, sum],
                )?
            };
            let kids = vec![self.nn(b)?, self.nn0(q)?, self.nn0(r)?, self.lt(r, b)?, total];
            return self.b.apply("modmuladdi", &[("A", &numeral(ma)), ("B", &nb), ("Q", &nq), ("R", &nr)], kids);
        }
        let q = ma.div_ceil(b);
        let p = b * q;
        let r = p - ma;
        let kids = vec![self.nn(b)?, self.nn0(q)?, self.nn0(r)?, self.lt(r, b)?, self.mul(b, q)?, self.add(ma, r)?];
        self.b.apply(
            "modmulnegi",
            &[("A", &numeral(ma)), ("B", &nb), ("Q", &numeral(q)), ("R", &numeral(r)), ("P", &numeral(p))],
            kids,
        )
    }

    /// `|- ( a ^ n ) = c`
    pub fn pow(&mut self, a: u128, n: u32) -> R {
        let na = numeral(a);
        let base = self.cn(a as i128)?;
        match n {
            0 => self.b.apply("numexp0", &[("A", &na)], vec![base]),
            1 => self.b.apply("numexp1", &[("A", &na)], vec![base]),
            _ => {
                let m = (n - 1) as u128;
                let prev = a.pow(n - 1);
                let kids = vec![base, self.nn0(m)?, self.add(m, 1)?, self.pow(a, n - 1)?, self.mul(prev, a)?];
                self.b.apply(
                    "numexpp1",
                    &[("A", &na), ("M", &numeral(m)), ("N", &numeral(m + 1)), ("C", &numeral(prev)), ("D", &numeral(prev * a))],
                    kids,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerals() {
        assert_eq!(numeral(7), "7");
        assert_eq!(numeral(242), "; ; 2 4 2");
        assert_eq!(numeral(10), "; 1 0");
        assert_eq!(signed(-35), "-u ; 3 5");
        assert_eq!(signed(0), "0");
    }
}
