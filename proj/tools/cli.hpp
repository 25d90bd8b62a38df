#pragma once

namespace nlscli {

// Exit codes: 0 ok, 1 numerical failure, 2 usage, 3 config validation.
int run_command(int argc, const char* const* argv);

}  // namespace nlscli
