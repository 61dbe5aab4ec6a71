#pragma once

namespace vae::cli {

/// Quick invariant checks; prints one line per check, returns the number of failures.
int run_selftest();

}  // namespace vae::cli
