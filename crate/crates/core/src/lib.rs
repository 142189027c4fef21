pub mod channels;
pub mod codec;
pub mod design;
pub mod dmc;
pub mod error;
pub mod group;
pub mod harness;
pub mod joint;
pub mod polar;
pub mod presets;
pub mod rates;
pub mod rng;
pub mod sc;
pub mod scenarios;

pub use error::{Error, Result};
pub use group::{AbelianGroup, Element, SubgroupId};
pub use joint::JointDist;
