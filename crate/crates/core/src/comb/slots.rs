use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_legs, LegSpec};

/// One access time of a process.
///
/// `input` is the leg on which the process hands the system to the
/// experimenter (`in_k`); `output` is the leg on which the experimenter
/// hands it back (`out_k`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSlot {
    pub name: String,
    pub input: Option<LegSpec>,
    pub output: Option<LegSpec>,
}

/// Ordered access times `t_i, t_1, …, t_n, t_f` with their legs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotStructure {
    times: Vec<TimeSlot>,
}

pub(crate) fn time_name(k: usize, n: usize) -> String {
    if k == 0 {
        "t_i".into()
    } else if k == n + 1 {
        "t_f".into()
    } else {
        format!("t_{k}")
    }
}

fn in_label(k: usize, n: usize) -> String {
    if k == n + 1 {
        "in_f".into()
    } else {
        format!("in_{k}")
    }
}

fn out_label(k: usize) -> String {
    if k == 0 {
        "out_i".into()
    } else {
        format!("out_{k}")
    }
}

impl SlotStructure {
    pub fn new(times: Vec<TimeSlot>) -> Result<Self> {
        let s = Self { times };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 {
            return Err(Error::InvalidProcess(
                "a process needs at least an initial and a final time".into(),
            ));
        }
        for (k, t) in self.times.iter().enumerate() {
            let (want_in, want_out) = (k > 0, k + 1 < n);
            if t.input.is_some() != want_in || t.output.is_some() != want_out {
                return Err(Error::InvalidProcess(format!(
                    "time `{}` has the wrong legs (t_i carries only an output leg, t_f only an input leg)",
                    t.name
                )));
            }
        }
        let mut names: Vec<&str> = self.times.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidProcess("time names must be unique".into()));
        }
        check_legs(&self.choi_legs()).map(|_| ())
    }

    /// Canonical labels with explicit dimensions: `out_i`, `(in_k, out_k)`
    /// per intermediate time and `in_f`.
    pub fn with_dims(out_i: usize, intermediate: &[(usize, usize)], in_f: usize) -> Self {
        let n = intermediate.len();
        let mut times = Vec::with_capacity(n + 2);
        times.push(TimeSlot {
            name: time_name(0, n),
            input: None,
            output: Some(LegSpec::new(out_label(0), out_i)),
        });
        for (k, &(din, dout)) in intermediate.iter().enumerate() {
            let k = k + 1;
            times.push(TimeSlot {
                name: time_name(k, n),
                input: Some(LegSpec::new(in_label(k, n), din)),
                output: Some(LegSpec::new(out_label(k), dout)),
            });
        }
        times.push(TimeSlot {
            name: time_name(n + 1, n),
            input: Some(LegSpec::new(in_label(n + 1, n), in_f)),
            output: None,
        });
        Self { times }
    }

    /// `n` intermediate times, every leg of dimension `dim`.
    pub fn uniform(n: usize, dim: usize) -> Self {
        Self::with_dims(dim, &vec![(dim, dim); n], dim)
    }

    /// Same dimensions, canonical names.
    pub fn canonicalized(&self) -> Self {
        let n = self.n_slots();
        let mids: Vec<(usize, usize)> = (1..=n)
            .map(|k| (self.in_dim(k), self.out_dim(k)))
            .collect();
        Self::with_dims(self.out_dim(0), &mids, self.in_dim(n + 1))
    }

    pub fn times(&self) -> &[TimeSlot] {
        &self.times
    }

    /// Number of intermediate times.
    pub fn n_slots(&self) -> usize {
        self.times.len() - 2
    }

    pub fn time_index(&self, name: &str) -> Option<usize> {
        self.times.iter().position(|t| t.name == name)
    }

    pub fn in_leg(&self, k: usize) -> &LegSpec {
        self.times[k].input.as_ref().expect("time has an input leg")
    }

    pub fn out_leg(&self, k: usize) -> &LegSpec {
        self.times[k].output.as_ref().expect("time has an output leg")
    }

    pub fn in_dim(&self, k: usize) -> usize {
        self.in_leg(k).dim
    }

    pub fn out_dim(&self, k: usize) -> usize {
        self.out_leg(k).dim
    }

    /// Choi leg order `in_f, out_n, in_n, …, out_1, in_1, out_i`.
    pub fn choi_legs(&self) -> Vec<LegSpec> {
        let mut legs = Vec::with_capacity(2 * self.times.len() - 2);
        // intermediate times contribute out_k before in_k
        for t in self.times.iter().rev() {
            if let Some(o) = &t.output {
                legs.push(o.clone());
            }
            if let Some(i) = &t.input {
                legs.push(i.clone());
            }
        }
        legs
    }

    pub fn choi_labels(&self) -> Vec<String> {
        self.choi_legs().into_iter().map(|l| l.label).collect()
    }

    /// Channel pairs `(in_{k+1}, out_k)` for `k = n, …, 0`, i.e. in Choi order.
    pub fn channel_pairs(&self) -> Vec<(LegSpec, LegSpec)> {
        let n = self.n_slots();
        (0..=n)
            .rev()
            .map(|k| (self.in_leg(k + 1).clone(), self.out_leg(k).clone()))
            .collect()
    }

    /// Drops the listed intermediate times (by index), keeping their neighbours' legs.
    pub(crate) fn without(&self, drop: &[usize]) -> Self {
        let times = self
            .times
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop.contains(k))
            .map(|(_, t)| t.clone())
            .collect();
        Self { times }
    }

    pub(crate) fn set_in_dim(&mut self, k: usize, dim: usize) {
        self.times[k].input.as_mut().expect("input leg").dim = dim;
    }

    pub(crate) fn set_out_dim(&mut self, k: usize, dim: usize) {
        self.times[k].output.as_mut().expect("output leg").dim = dim;
    }

    pub fn intermediate_names(&self) -> Vec<&str> {
        let n = self.n_slots();
        self.times[1..=n].iter().map(|t| t.name.as_str()).collect()
    }

    /// Resolves intermediate time names to indices.
    pub fn resolve_intermediate(&self, names: &[&str]) -> Result<Vec<usize>> {
        let n = self.n_slots();
        names
            .iter()
            .map(|name| match self.time_index(name) {
                Some(k) if k >= 1 && k <= n => Ok(k),
                _ => Err(Error::UnknownTime((*name).to_string())),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_leg_order() {
        let s = SlotStructure::uniform(2, 2);
        assert_eq!(
            s.choi_labels(),
            vec!["in_f", "out_2", "in_2", "out_1", "in_1", "out_i"]
        );
        let pairs: Vec<(String, String)> = s
            .channel_pairs()
            .into_iter()
            .map(|(a, b)| (a.label, b.label))
            .collect();
        assert_eq!(pairs[0], ("in_f".to_string(), "out_2".to_string()));
        assert_eq!(pairs[2], ("in_1".to_string(), "out_i".to_string()));
    }

    #[test]
    fn rejects_malformed_times() {
        let mut s = SlotStructure::uniform(1, 2);
        s.times[1].output = None;
        assert!(SlotStructure::new(s.times.clone()).is_err());
        let zero = SlotStructure::uniform(0, 3);
        assert_eq!(zero.choi_labels(), vec!["in_f", "out_i"]);
        assert!(zero.resolve_intermediate(&["t_1"]).is_err());
    }
}
