pub mod linalg;
pub mod words;
pub mod zoo;
