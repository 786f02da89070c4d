#pragma once

namespace sharpen::cli {

// Exit codes: 0 success, 1 input error, 2 capacity error, 3 numerical failure.
int run(int argc, const char* const* argv);

}  // namespace sharpen::cli
