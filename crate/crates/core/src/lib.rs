//! Exact contextuality analysis for finite measurement scenarios.

pub mod audit;
pub mod deciders;
pub mod io;
pub mod iso;
pub mod lp;
pub mod model;
pub mod rational;
pub mod transforms;

pub use model::{Behavior, CompositeObservable, Context, Distribution, Observable, Scenario};
pub use rational::Rational;
