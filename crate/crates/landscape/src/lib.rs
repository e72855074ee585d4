//! Turning black-box optimization landscapes into images and back into decisions.
//!
//! The crate is organized around one workflow:
//!
//! 1. [`problems`] generates seeded, shifted, rotated instances of classic
//!    test-function classes on a `[-5, 5]^D` box.
//! 2. [`sampling`] evaluates a shared coordinate set on an instance,
//!    min-max-normalizes the fitness vector and reshapes it into a square
//!    grayscale image.
//! 3. [`convnet`] is a self-contained convolutional network engine (VGG-style
//!    stacks, softmax cross-entropy, Adam) that learns to classify those
//!    images, either by problem class or by best-performing optimizer.
//! 4. [`optimizers`] provides the algorithm set (ABC, CMA-ES, L-SHADE) with
//!    strict evaluation-budget accounting.
//! 5. [`pipeline`] wires everything into datasets, labeling runs, the
//!    10%/90% budget-split selector and rank reporting.
//!
//! Everything is deterministic under a master seed: datasets, training runs
//! and optimizer trajectories reproduce bit-identically.

pub mod convnet;
pub mod optimizers;
pub mod pipeline;
pub mod problems;
pub mod sampling;
pub mod seeding;
