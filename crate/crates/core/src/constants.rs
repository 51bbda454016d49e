//! Physical constants (SI).

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_817e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_061_4e-6;
/// Free-space wave impedance, ohms.
pub const ETA0: f64 = 376.730_313_668;
