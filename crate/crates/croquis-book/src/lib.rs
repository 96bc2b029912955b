//! Doc-test host for the guide in `book/`.
//!
//! Each chapter of the book is included here as module documentation, so
//! `cargo test -p croquis-book` compiles and runs every Rust code block the
//! book shows. Editing a chapter and breaking a snippet fails the test
//! suite, which keeps the book and the library in sync.
