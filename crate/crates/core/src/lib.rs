pub mod assoc;
pub mod channel;
pub mod geometry;
pub mod rate;
pub mod specfun;
pub mod sim;
