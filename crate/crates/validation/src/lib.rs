//! Holds the `acceptance` test target, which runs end-to-end checks against
//! the numerical core and the scenario runner and prints one PASS/FAIL line
//! per check.
