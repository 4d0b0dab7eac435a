//! Holds the `acceptance` integration test, which runs the end-to-end
//! acceptance criteria and prints one PASS/FAIL line per criterion.
