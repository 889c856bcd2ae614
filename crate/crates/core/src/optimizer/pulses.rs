use crate::comb::{Channel, ControlComb, SlotStructure};
use crate::error::{Error, Result};
use crate::gates::Pulse;
use crate::scalar::Real;

/// Open-loop pulse sequence on qubit slots: `pattern[k - 1]` is applied
/// at `t_k`, posts are identities and every intermediate time is masked.
pub fn dd_sequence<R: Real>(n_slots: usize, pattern: &[Pulse]) -> Result<ControlComb<R>> {
    if pattern.len() != n_slots {
        return Err(Error::Config(format!(
            "pattern has {} pulses for {n_slots} slots",
            pattern.len()
        )));
    }
    let trivial = ControlComb::trivial(&SlotStructure::uniform(n_slots, 2));
    let mut pre = trivial.pre().to_vec();
    for (k, p) in pattern.iter().enumerate() {
        pre[k + 1] = Channel::from_unitary(&p.matrix());
    }
    ControlComb::new(pre, trivial.post().to_vec(), 1..=n_slots)
}

/// `X, Z, X, Z, …` truncated to `n_slots`.
pub fn xzxz(n_slots: usize) -> Vec<Pulse> {
    (0..n_slots)
        .map(|k| if k % 2 == 0 { Pulse::X } else { Pulse::Z })
        .collect()
}
