//! Exact arithmetic for Lubin-Tate formal groups over finite extensions of
//! `Q_p`: p-adic scalars, two-step field towers, truncated power series,
//! formal group laws and logarithms, and the module structure of the
//! Lubin-Tate module `F(m_L)`.

pub mod element;
pub mod error;
pub mod field;
pub mod lubin_tate;
pub mod fpoly;
pub mod padic;
pub mod series;
pub mod structure;

pub use element::FieldElement;
pub use error::{Error, Result};
pub use field::{LocalField, TowerSpec};
pub use padic::PadicScalar;
