#ifndef UAV_CLI_H_
#define UAV_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace uav {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipelineError = 1;
inline constexpr int kExitUsageError = 2;

// Entry point of the `uav` executable. `args` excludes the program name.
// Reports go to `out` as JSON; failures go to `err` as
// {"code": ..., "message": ..., "context": ...}.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uav

#endif  // UAV_CLI_H_
