//! Radial finite-volume discretization, pair constructors, the T-hat map and monotone iteration.

pub mod amann;
pub mod certify;
pub mod operator;
pub mod pairs;
pub mod solve;

pub use amann::{amann_iterate, search_third_solution, that_map, IterationTrace, Start, ThatMap};
pub use certify::{certify_nonordering, certify_ordering, certify_solution, equation_residual, pointwise_residual, SolutionKind};
pub use operator::DiscreteOperator;
pub use pairs::{build_first_pair, build_second_pair, certify_pairs, FirstPair, PairCertificates, SecondPair};
pub use solve::{solve_eta_problem, solve_load, solve_singular_constant, Method, Pointwise, Problem, SolveOptions};
