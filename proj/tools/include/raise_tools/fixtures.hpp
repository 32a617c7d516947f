#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "raise/types.hpp"

namespace raisesql::fixtures {

/// Creates (or replaces) a database file by running `sql`.
void create_database(const std::filesystem::path& file, const std::string& sql);

/// owner(owner_id, name, city) and pet(pet_id, name, species, owner_id ->
/// owner, weight): two owners, three pets.
void build_pets_db(const std::filesystem::path& file);
/// Column documentation for the pets database (one CSV per table).
void write_pets_docs(const std::filesystem::path& dir);

struct MiniBird {
  std::filesystem::path root;
  std::vector<Question> questions;
};

/// Ten questions over two databases in the benchmark's directory layout:
/// 6 simple, 3 moderate, 1 challenging.
MiniBird build_mini_bird(const std::filesystem::path& root);

enum class Role { explorer, generator, columns };

/// Scripted responses of one backend role for the mini dataset. Every entry
/// is keyed on the question text, so a tape gives the same answers in any
/// call order.
std::string mini_bird_tape(Role role);

/// Run configuration (JSON text) for the mini dataset with three scripted
/// backends reading <tape_dir>/{explorer,generator,columns}.tape.
std::string mini_bird_config(const std::filesystem::path& dataset_root, const std::filesystem::path& tape_dir,
                             const std::filesystem::path& store);

/// Writes dataset, tapes and config under `dir`; returns the config path.
std::filesystem::path write_mini_bird_demo(const std::filesystem::path& dir);

}  // namespace raisesql::fixtures
