//! Observable estimation (implemented after propagation).
