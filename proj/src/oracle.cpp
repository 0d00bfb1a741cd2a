#include "streamq/oracle.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace streamq {

ProcessOracle::ProcessOracle(const std::string& command) {
    // O_CLOEXEC keeps our pipe ends out of unrelated children; dup2 clears
    // the flag on the ends the child actually uses.
    int to_child[2], from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0 || pipe2(from_child, O_CLOEXEC) != 0)
        throw std::runtime_error("process oracle: pipe failed");
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("process oracle: fork failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        execl("/bin/sh", "sh", "-c", command.c_str(),
              static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    child_pid_ = pid;
    to_child_ = fdopen(to_child[1], "w");
    from_child_ = fdopen(from_child[0], "r");
    if (!to_child_ || !from_child_)
        throw std::runtime_error("process oracle: fdopen failed");
}

ProcessOracle::~ProcessOracle() {
    if (to_child_) fclose(to_child_);
    if (from_child_) fclose(from_child_);
    if (child_pid_ > 0) {
        int status = 0;
        waitpid(child_pid_, &status, 0);
    }
}

std::optional<OracleOutcome> ProcessOracle::invoke(const Record& rec) {
    if (std::fprintf(to_child_, "%llu\n",
                     static_cast<unsigned long long>(rec.index)) < 0)
        return std::nullopt;
    if (std::fflush(to_child_) != 0) return std::nullopt;
    char line[256];
    if (!std::fgets(line, sizeof(line), from_child_)) return std::nullopt;
    int matched = -1;
    double stat = 0.0;
    if (std::sscanf(line, "%d %lf", &matched, &stat) != 2) return std::nullopt;
    if (matched != 0 && matched != 1) return std::nullopt;
    return OracleOutcome{matched == 1, stat};
}

}  // namespace streamq
