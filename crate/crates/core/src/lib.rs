//! Rotational surfaces with prescribed mean curvature `H(ν)` in `H²×ℝ` and
//! `S²×ℝ`: phase-plane analysis of the profile ODE, necessary conditions for
//! closed surfaces, and the Delaunay-type classification into spheres,
//! cylinders, unduloids, nodoids and tori.

pub mod cli;
pub mod delaunay;
pub mod geomk;
pub mod hfunc;
pub mod orbit;
pub mod phaseplane;
pub mod roots;
