#pragma once

#include <stdexcept>
#include <string>

namespace finray {

// Domain failure carrying a stable error name. The CLI prints the name and
// exits with status 1.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& detail)
        : std::runtime_error(name + ": " + detail), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

} // namespace finray
