#pragma once

#include <iosfwd>

namespace dpacct::cli {

// Exit codes: 0 success, 2 validation error, 3 ledger above --max-ledger.
constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitLedger = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpacct::cli
