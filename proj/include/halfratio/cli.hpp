#pragma once

namespace halfratio::cli {

/// Runs one CLI invocation. Returns 0 on success, 1 on usage errors
/// (including missing input files), 2 on solver/runtime errors.
int dispatch(int argc, const char* const* argv);

} // namespace halfratio::cli
