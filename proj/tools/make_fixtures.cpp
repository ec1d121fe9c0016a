#include <filesystem>
#include <fstream>
#include <iostream>

#include "obatalab/errors.hpp"
#include "obatalab/fixtures.hpp"

// Writes the shipped ray-family fixtures under the given directory.
int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: obatalab-fixtures <dir>\n";
        return 1;
    }
    try {
        const std::filesystem::path root = argv[1];
        for (const auto& [rel, body] : obatalab::loc::fixtures::all_fixtures()) {
            const auto path = root / rel;
            std::filesystem::create_directories(path.parent_path());
            std::ofstream(path, std::ios::binary) << body;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
