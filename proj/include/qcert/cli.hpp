#pragma once

namespace qcert {

// Exit codes: 0 success, 2 verification or certification failure,
// 3 solver failure, 4 configuration or input error.
int cli_main(int argc, char** argv);

}  // namespace qcert
