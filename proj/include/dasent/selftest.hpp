#pragma once

#include <iosfwd>

namespace dasent {

// Quick built-in checks (graph, gradient, statistics, parser) on in-memory
// fixtures. Prints one line per check; true when all pass.
bool run_selftest(std::ostream& out);

}  // namespace dasent
