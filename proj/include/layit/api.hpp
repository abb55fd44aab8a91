#pragma once

#include <string>

#include "layit/workbench.hpp"

namespace httplib {
class Server;
}

namespace layit {

// Registers the /api routes on `server`. Bodies and responses are JSON;
// failures come back as {code, message, details}.
void install_routes(httplib::Server& server, Workbench& wb);

int http_status(const std::string& error_code);

// Blocks until the server stops.
bool serve(Workbench& wb, const std::string& host, int port);

}  // namespace layit
