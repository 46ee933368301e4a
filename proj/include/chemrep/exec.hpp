#pragma once

namespace chemrep {

/// Execution policy for data-parallel kernels. Both paths give bit-identical
/// results; serial is the reference implementation.
enum class Exec { serial, parallel };

}  // namespace chemrep
