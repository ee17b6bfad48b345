#pragma once

namespace mcbd::cli {
int run(int argc, char** argv);
}
