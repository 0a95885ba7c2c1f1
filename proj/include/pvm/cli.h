#ifndef PVM_CLI_H_
#define PVM_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace pvm {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace pvm

#endif  // PVM_CLI_H_
