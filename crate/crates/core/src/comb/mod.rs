//! Process tensors, channels and control combs.

mod channel;
mod control;
mod process;
mod slots;

pub use channel::{Channel, ChannelDefects};
pub use control::{ChannelRef, ControlComb};
pub use process::{Diagnostics, ProcessTensor};
pub use slots::{SlotStructure, TimeSlot};

pub(crate) use control::primed;
