//! Index-loop reference implementations of the tensor primitives.

use combres::{LegSpec, MultiLegMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Dense operator with named legs, first leg most significant.
#[derive(Clone, Debug)]
pub struct Op {
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub m: Vec<Complex64>,
}

impl Op {
    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    /// Random entries of size `1/n`, the scale of a unit-trace operator.
    pub fn random(labels: &[&str], dims: &[usize], rng: &mut impl Rng) -> Self {
        let n: usize = dims.iter().product();
        let w = 1.0 / n as f64;
        let m = (0..n * n)
            .map(|_| Complex64::new(rng.random_range(-w..w), rng.random_range(-w..w)))
            .collect();
        Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            dims: dims.to_vec(),
            m,
        }
    }

    pub fn to_lib(&self) -> MultiLegMatrix<f64> {
        let n = self.n();
        let legs = self
            .labels
            .iter()
            .zip(&self.dims)
            .map(|(l, &d)| LegSpec::new(l.as_str(), d))
            .collect();
        MultiLegMatrix::new(DMatrix::from_fn(n, n, |i, j| self.m[i * n + j]), legs).unwrap()
    }

    pub fn from_lib(x: &MultiLegMatrix<f64>) -> Self {
        let n = x.dim();
        Self {
            labels: x.legs().iter().map(|l| l.label.clone()).collect(),
            dims: x.legs().iter().map(|l| l.dim).collect(),
            m: (0..n * n).map(|k| x.entries()[(k / n, k % n)]).collect(),
        }
    }

    fn pos(&self, label: &str) -> usize {
        self.labels.iter().position(|l| l == label).unwrap()
    }

    fn flat(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn get(&self, row: &[usize], col: &[usize]) -> Complex64 {
        self.m[self.flat(row) * self.n() + self.flat(col)]
    }
}

/// All multi-indices for `dims`, first digit most significant.
pub fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..d).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn build(labels: Vec<String>, dims: Vec<usize>, f: impl Fn(&[usize], &[usize]) -> Complex64) -> Op {
    let idx = multi_indices(&dims);
    let n = idx.len();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for (i, r) in idx.iter().enumerate() {
        for (j, c) in idx.iter().enumerate() {
            m[i * n + j] = f(r, c);
        }
    }
    Op { labels, dims, m }
}

pub fn partial_trace(x: &Op, over: &[&str]) -> Op {
    let keep: Vec<usize> = (0..x.labels.len()).filter(|&p| !over.contains(&x.labels[p].as_str())).collect();
    let traced: Vec<usize> = over.iter().map(|l| x.pos(l)).collect();
    let tdims: Vec<usize> = traced.iter().map(|&p| x.dims[p]).collect();
    let tidx = multi_indices(&tdims);
    build(
        keep.iter().map(|&p| x.labels[p].clone()).collect(),
        keep.iter().map(|&p| x.dims[p]).collect(),
        |r, c| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &tidx {
                let mut row = vec![0; x.dims.len()];
                let mut col = vec![0; x.dims.len()];
                for (k, &p) in keep.iter().enumerate() {
                    row[p] = r[k];
                    col[p] = c[k];
                }
                for (k, &p) in traced.iter().enumerate() {
                    row[p] = t[k];
                    col[p] = t[k];
                }
                acc += x.get(&row, &col);
            }
            acc
        },
    )
}

pub fn partial_transpose(x: &Op, over: &[&str]) -> Op {
    let flip: Vec<usize> = over.iter().map(|l| x.pos(l)).collect();
    build(x.labels.clone(), x.dims.clone(), |r, c| {
        let (mut row, mut col) = (r.to_vec(), c.to_vec());
        for &p in &flip {
            std::mem::swap(&mut row[p], &mut col[p]);
        }
        x.get(&row, &col)
    })
}

pub fn tensor(a: &Op, b: &Op) -> Op {
    let na = a.labels.len();
    build(
        a.labels.iter().chain(&b.labels).cloned().collect(),
        a.dims.iter().chain(&b.dims).copied().collect(),
        |r, c| a.get(&r[..na], &c[..na]) * b.get(&r[na..], &c[na..]),
    )
}

/// Reorders the legs of `x` to `labels`.
pub fn reorder(x: &Op, labels: &[String]) -> Op {
    let perm: Vec<usize> = labels.iter().map(|l| x.pos(l)).collect();
    build(labels.to_vec(), perm.iter().map(|&p| x.dims[p]).collect(), |r, c| {
        let mut row = vec![0; r.len()];
        let mut col = vec![0; c.len()];
        for (k, &p) in perm.iter().enumerate() {
            row[p] = r[k];
            col[p] = c[k];
        }
        x.get(&row, &col)
    })
}

fn matmul(a: &Op, b: &Op) -> Op {
    let n = a.n();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a.m[i * n + k];
            for j in 0..n {
                m[i * n + j] += x * b.m[k * n + j];
            }
        }
    }
    Op {
        labels: a.labels.clone(),
        dims: a.dims.clone(),
        m,
    }
}

fn identity(labels: &[String], dims: &[usize]) -> Op {
    build(labels.to_vec(), dims.to_vec(), |r, c| {
        Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0)
    })
}

/// `Π d_S · tr_S[(T^{T_S} ⊗ 1)(1 ⊗ Z)]` built on the full joint space.
pub fn link(t: &Op, z: &Op) -> Op {
    let shared: Vec<String> = t.labels.iter().filter(|l| z.labels.contains(l)).cloned().collect();
    let x: Vec<String> = t.labels.iter().filter(|l| !shared.contains(l)).cloned().collect();
    let a: Vec<String> = z.labels.iter().filter(|l| !shared.contains(l)).cloned().collect();
    let dim_of = |l: &String| {
        t.labels
            .iter()
            .position(|m| m == l)
            .map(|p| t.dims[p])
            .unwrap_or_else(|| z.dims[z.pos(l)])
    };
    let xd: Vec<usize> = x.iter().map(dim_of).collect();
    let ad: Vec<usize> = a.iter().map(dim_of).collect();
    let sd: Vec<usize> = shared.iter().map(dim_of).collect();
    let s_refs: Vec<&str> = shared.iter().map(String::as_str).collect();
    let tt = partial_transpose(t, &s_refs);
    let order: Vec<String> = x.iter().chain(&shared).chain(&a).cloned().collect();
    let lhs = reorder(&tensor(&tt, &identity(&a, &ad)), &order);
    let rhs = reorder(&tensor(&identity(&x, &xd), z), &order);
    let prod = matmul(&lhs, &rhs);
    let mut out = partial_trace(&prod, &s_refs);
    let factor = sd.iter().product::<usize>() as f64;
    out.m.iter_mut().for_each(|v| *v *= factor);
    out
}

/// Max-abs difference after aligning leg order by label.
pub fn max_diff(a: &Op, b: &Op) -> f64 {
    assert_eq!(a.labels.len(), b.labels.len());
    let b = reorder(b, &a.labels);
    assert_eq!(a.dims, b.dims);
    a.m.iter().zip(&b.m).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Every leg configuration with at most four legs of dimension 1–3.
pub fn leg_configurations() -> Vec<Vec<usize>> {
    (1..=4)
        .flat_map(|k| multi_indices(&vec![3; k]))
        .map(|v| v.into_iter().map(|x| x + 1).collect::<Vec<_>>())
        .collect()
}

pub fn subsets<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    (0..1usize << items.len())
        .map(|m| {
            items
                .iter()
                .enumerate()
                .filter(|(k, _)| m >> k & 1 == 1)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

/// Checks partial trace, partial transpose and tensor product against the
/// oracles; returns the worst error.
pub fn worst_oracle_error(rng: &mut impl Rng) -> f64 {
    let names = ["p", "q", "r", "s", "u", "v", "w"];
    let mut worst = 0.0f64;
    for dims in leg_configurations() {
        let labels = &names[..dims.len()];
        let x = Op::random(labels, &dims, rng);
        let lib = x.to_lib();
        for over in subsets(labels) {
            let pt = Op::from_lib(&lib.partial_trace(&over).unwrap());
            worst = worst.max(max_diff(&partial_trace(&x, &over), &pt));
            let tr = Op::from_lib(&lib.partial_transpose(&over).unwrap());
            worst = worst.max(max_diff(&partial_transpose(&x, &over), &tr));
        }
        // tensor with a second operator on the remaining names
        for extra in leg_configurations() {
            let n: usize = dims.iter().chain(&extra).product();
            if n > 81 || dims.len() + extra.len() > names.len() || extra.len() > 2 {
                continue;
            }
            let y = Op::random(&names[dims.len()..dims.len() + extra.len()], &extra, rng);
            let got = Op::from_lib(&lib.tensor(&y.to_lib()).unwrap());
            worst = worst.max(max_diff(&tensor(&x, &y), &got));
        }
    }
    worst
}

/// Link products over every split of up to four legs into `T`-only,
/// shared and `Z`-only parts, with the shared legs in reversed order on `Z`.
pub fn worst_link_error(rng: &mut impl Rng) -> f64 {
    let names = ["a", "b", "c", "d"];
    let mut worst = 0.0f64;
    for dims in leg_configurations() {
        let k = dims.len();
        // role of each leg: 0 = T only, 1 = shared, 2 = Z only
        for roles in multi_indices(&vec![3; k]) {
            let pick = |want: usize| -> Vec<usize> { (0..k).filter(|&p| roles[p] == want).collect() };
            let (xs, ss, zs) = (pick(0), pick(1), pick(2));
            let t_pos: Vec<usize> = ss.iter().chain(&xs).copied().collect();
            let z_pos: Vec<usize> = ss.iter().rev().chain(&zs).copied().collect();
            if t_pos.is_empty() || z_pos.is_empty() {
                continue;
            }
            let lab = |ps: &[usize]| ps.iter().map(|&p| names[p]).collect::<Vec<_>>();
            let dim = |ps: &[usize]| ps.iter().map(|&p| dims[p]).collect::<Vec<_>>();
            let t = Op::random(&lab(&t_pos), &dim(&t_pos), rng);
            let z = Op::random(&lab(&z_pos), &dim(&z_pos), rng);
            let got = Op::from_lib(&t.to_lib().link(&z.to_lib()).unwrap());
            worst = worst.max(max_diff(&link(&t, &z), &got));
        }
    }
    worst
}
