pub mod ball;
pub mod error;
pub mod poly;
pub mod roots;
pub mod field;
pub mod units;
pub mod forms;
pub mod classify;
pub mod solver;
pub mod trace;
pub mod density;
pub mod io;
