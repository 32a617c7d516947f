#include "raise_tools/fixtures.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <sqlite3.h>

#include "raise/backend.hpp"
#include "raise/error.hpp"
#include "raise/serialize.hpp"

namespace fs = std::filesystem;

namespace raisesql::fixtures {
namespace {

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + file.string());
}

constexpr const char* kLibrarySql = R"sql(
CREATE TABLE author (author_id INTEGER PRIMARY KEY, name TEXT NOT NULL, country TEXT);
CREATE TABLE book (
  book_id INTEGER PRIMARY KEY,
  title TEXT NOT NULL,
  author_id INTEGER REFERENCES author(author_id),
  year INTEGER,
  price REAL
);
INSERT INTO author VALUES (1, 'Isabel Allende', 'Chile'), (2, 'Pablo Neruda', 'Chile'),
  (3, 'Jorge Luis Borges', 'Argentina'), (4, 'Clarice Lispector', 'Brazil');
INSERT INTO book VALUES
  (1, 'The House of the Spirits', 1, 1982, 18.5),
  (2, 'Eva Luna', 1, 1987, 15.0),
  (3, 'Paula', 1, 1994, 14.25),
  (4, 'Twenty Love Poems', 2, 1924, 9.99),
  (5, 'Canto General', 2, 1950, 22.0),
  (6, 'Ficciones', 3, 1944, 12.5),
  (7, 'The Aleph', 3, 1949, 11.0),
  (8, 'The Hour of the Star', 4, 1977, 13.75);
)sql";

constexpr const char* kClinicSql = R"sql(
CREATE TABLE patient (patient_id INTEGER PRIMARY KEY, name TEXT, sex TEXT, birth_year INTEGER);
CREATE TABLE visit (
  visit_id INTEGER PRIMARY KEY,
  patient_id INTEGER REFERENCES patient(patient_id),
  visit_date TEXT,
  cost REAL
);
INSERT INTO patient VALUES (1, 'Ana', 'F', 1980), (2, 'Bruno', 'M', 1975), (3, 'Carla', 'F', 1992),
  (4, 'Diego', 'M', 2001);
INSERT INTO visit VALUES
  (1, 1, '2022-11-03', 80.0),
  (2, 1, '2023-02-14', 120.0),
  (3, 2, '2023-05-20', 95.5),
  (4, 3, '2021-07-01', 300.0),
  (5, 4, '2023-09-09', 45.0),
  (6, 2, '2022-01-30', 150.0);
)sql";

struct Scripted {
  std::string id, db, question, evidence, gold, difficulty;
  std::string explore_query;  // interaction agent's probe
  std::string generated;      // first generator answer
  std::string retry;          // answer after feedback, if the first one fails
  std::string columns;        // JSON array for the column question
  std::string informed;       // answer once `informed_by` appears in the prompt
  std::string informed_by;
};

const std::vector<Scripted>& scripted() {
  static const std::vector<Scripted> items = {
      {"0", "library", "How many books are in the catalogue?", "", "SELECT COUNT(*) FROM book", "simple",
       "SELECT COUNT(*) FROM book", "SELECT COUNT(*) FROM book", "", R"j(["COUNT(*)"])j"},
      {"1", "library", "List the titles of books published before 1950.", "", "SELECT title FROM book WHERE year < 1950",
       "simple", "SELECT title, year FROM book LIMIT 3", "SELECT title FROM book WHERE year < 1950", "",
       R"j(["title"])j"},
      {"2", "library", "What is the name of the author who wrote the most books?", "",
       "SELECT a.name FROM author AS a JOIN book AS b ON a.author_id = b.author_id GROUP BY a.author_id "
       "ORDER BY COUNT(*) DESC LIMIT 1",
       "moderate", "SELECT author_id, COUNT(*) FROM book GROUP BY author_id",
       "SELECT a.name, COUNT(*) FROM author AS a JOIN book AS b ON a.author_id = b.author_id GROUP BY a.author_id "
       "ORDER BY COUNT(*) DESC LIMIT 1",
       "", R"j(["a.name"])j"},
      {"3", "library", "What is the average price of books by authors from Chile?",
       "from Chile refers to country = 'Chile'",
       "SELECT AVG(b.price) FROM book AS b JOIN author AS a ON a.author_id = b.author_id WHERE a.country = 'Chile'",
       "simple", "SELECT DISTINCT country FROM author",
       "SELECT AVG(b.price) FROM book AS b JOIN author AS a ON a.author_id = b.author_id WHERE a.country = 'Chile'",
       "", R"j(["AVG(b.price)"])j"},
      {"4", "library", "Which author has the highest total price of books published after 1960?",
       "after 1960 refers to year > 1960",
       "SELECT a.name FROM author AS a JOIN book AS b ON a.author_id = b.author_id WHERE b.year > 1960 "
       "GROUP BY a.author_id ORDER BY SUM(b.price) DESC LIMIT 1",
       "challenging", "SELECT author_id, SUM(price) FROM book GROUP BY author_id",
       "SELECT a.name FROM author AS a JOIN book AS b ON a.author_id = b.author_id GROUP BY a.author_id "
       "ORDER BY SUM(b.price) LIMIT 1",
       "", R"j(["a.name"])j"},
      {"5", "clinic", "How many female patients are there?", "female refers to sex = 'F'",
       "SELECT COUNT(*) FROM patient WHERE sex = 'F'", "simple", "SELECT DISTINCT sex FROM patient",
       "SELECT COUNT(*) FROM patient WHERE sex = 'F'", "", R"j(["COUNT(*)"])j"},
      {"6", "clinic", "What is the total cost of all visits?", "", "SELECT SUM(cost) FROM visit", "simple",
       "SELECT cost FROM visit LIMIT 3", "SELECT SUM(costs) FROM visit", "SELECT SUM(cost) FROM visit",
       R"j(["SUM(cost)"])j"},
      {"7", "clinic", "List the names of patients who visited in 2023.", "visited in 2023 refers to visit_date LIKE '2023%'",
       "SELECT DISTINCT p.name FROM patient AS p JOIN visit AS v ON v.patient_id = p.patient_id "
       "WHERE v.visit_date LIKE '2023%'",
       "moderate", "SELECT visit_date FROM visit LIMIT 3",
       "SELECT p.name FROM patient AS p JOIN visit AS v ON v.patient_id = p.patient_id "
       "WHERE v.visit_date LIKE '2023%'",
       "", R"j(["p.name"])j"},
      {"8", "clinic", "What is the birth year of the patient with the most expensive visit?", "",
       "SELECT p.birth_year FROM patient AS p JOIN visit AS v ON v.patient_id = p.patient_id "
       "ORDER BY v.cost DESC LIMIT 1",
       "moderate", "SELECT MAX(cost) FROM visit",
       "SELECT p.name, p.birth_year FROM patient AS p JOIN visit AS v ON v.patient_id = p.patient_id "
       "ORDER BY v.cost DESC LIMIT 1",
       "", R"j(["p.birth_year"])j",
       "SELECT p.birth_year FROM patient AS p JOIN visit AS v ON v.patient_id = p.patient_id "
       "ORDER BY v.cost DESC LIMIT 1",
       "cost REAL"},
      {"9", "clinic", "How many visits cost more than 100?", "", "SELECT COUNT(*) FROM visit WHERE cost > 100",
       "simple", "SELECT COUNT(*) FROM visit WHERE cost > 100", "SELECT COUNT(*) FROM visit WHERE cost > 100", "",
       R"j(["COUNT(*)"])j"},
  };
  return items;
}

const char* table_for(const Scripted& s) { return s.db == "library" ? "book" : "visit"; }

}  // namespace

void create_database(const fs::path& file, const std::string& sql) {
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  fs::remove(file, ec);
  sqlite3* db = nullptr;
  if (sqlite3_open(file.c_str(), &db) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw Error(fmt::format("cannot create {}: {}", file.string(), msg));
  }
  char* err = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db);
    throw Error(fmt::format("fixture script failed for {}: {}", file.string(), msg));
  }
  sqlite3_close(db);
}

void build_pets_db(const fs::path& file) {
  create_database(file, R"sql(
CREATE TABLE owner (owner_id INTEGER PRIMARY KEY, name TEXT NOT NULL, city TEXT);
CREATE TABLE pet (
  pet_id INTEGER PRIMARY KEY,
  name TEXT NOT NULL,
  species TEXT,
  owner_id INTEGER REFERENCES owner(owner_id),
  weight REAL
);
INSERT INTO owner VALUES (1, 'Alice', 'Lisbon'), (2, 'Bob', 'Porto');
INSERT INTO pet VALUES (1, 'Rex', 'dog', 1, 30.5), (2, 'Tom', 'cat', 1, 4.2), (3, 'Nemo', 'fish', 2, NULL);
)sql");
}

void write_pets_docs(const fs::path& dir) {
  write_text(dir / "pet.csv",
             "original_column_name,column_name,column_description,data_format,value_description\n"
             "pet_id,pet id,unique id of the pet,integer,\n"
             "species,species,kind of animal,text,\"lowercase, e.g. dog or cat\"\n"
             "weight,weight,body weight,real,in kilograms\n");
  write_text(dir / "owner.csv",
             "original_column_name,column_name,column_description,data_format,value_description\n"
             "owner_id,owner id,unique id of the owner,integer,\n"
             "city,city,home city,text,\n");
}

MiniBird build_mini_bird(const fs::path& root) {
  MiniBird out{root, {}};
  create_database(root / "dev_databases" / "library" / "library.sqlite", kLibrarySql);
  create_database(root / "dev_databases" / "clinic" / "clinic.sqlite", kClinicSql);
  const fs::path docs = root / "dev_databases" / "library" / "database_description";
  write_text(docs / "book.csv",
             "original_column_name,column_name,column_description,data_format,value_description\n"
             "book_id,book id,unique id of the book,integer,\n"
             "year,publication year,year of first publication,integer,\n"
             "price,price,list price,real,in US dollars\n");
  write_text(docs / "author.csv",
             "original_column_name,column_name,column_description,data_format,value_description\n"
             "country,country,country of birth,text,English country name\n");

  nlohmann::json records = nlohmann::json::array();
  for (const auto& s : scripted()) {
    Question q{s.id, s.db, s.question, s.evidence, s.gold, difficulty_from_string(s.difficulty)};
    records.push_back(q);
    out.questions.push_back(std::move(q));
  }
  write_text(root / "dev.json", records.dump(2) + "\n");
  return out;
}

std::string mini_bird_tape(Role role) {
  constexpr const char* kInteraction = "verify every assumption against the data";
  constexpr const char* kStatic = "You cannot execute queries";
  constexpr const char* kGenerate = "Write one SQLite query";
  constexpr const char* kColumns = "Decide exactly which columns";
  std::vector<TapeEntry> tape;
  auto entry = [&](std::string response, std::vector<std::string> matchers, bool repeat) {
    tape.push_back(TapeEntry{std::move(response), std::move(matchers), repeat, std::nullopt});
  };
  for (const auto& s : scripted()) {
    const std::string q = "Question: " + s.question;
    const std::string table = table_for(s);
    const std::string fenced = "```sql\n" + s.gold + "\n```";
    switch (role) {
      case Role::explorer:
        // Entries of one exploration are consumed in tape order.
        entry(" I will start with the table list.\n[RUN] read_table_names() [EXECUTE]", {kInteraction, q}, false);
        entry(" Next the columns.\n[RUN] read_table_columns(" + table + ") [EXECUTE]",
              {kInteraction, q, "[/RESULT]"}, false);
        entry(" Checking stored values.\n[RUN] run_query(" + s.explore_query + ") [EXECUTE]",
              {kInteraction, q, "[/RESULT]"}, false);
        entry(" That settles it.\n" + fenced, {kInteraction, q, "[/RESULT]"}, false);

        entry(" Tables first.\n[RUN] read_table_names() [EXECUTE]", {kStatic, q}, false);
        entry(" Columns of " + table + ".\n[RUN] read_table_columns(" + table + ") [EXECUTE]",
              {kStatic, q, "[/RESULT]"}, false);
        entry(" Final query:\n" + fenced, {kStatic, q, "[/RESULT]"}, false);
        break;
      case Role::generator:
        if (!s.retry.empty()) entry("```sql\n" + s.retry + "\n```", {kGenerate, q, "Attempt 1"}, true);
        // Answers correctly only once the column listing is in the prompt.
        if (!s.informed.empty()) entry("```sql\n" + s.informed + "\n```", {kGenerate, q, s.informed_by}, true);
        entry("```sql\n" + s.generated + "\n```", {kGenerate, q}, true);
        break;
      case Role::columns:
        entry(s.columns, {kColumns, q}, true);
        break;
    }
  }
  return format_tape(tape);
}

std::string mini_bird_config(const fs::path& dataset_root, const fs::path& tape_dir, const fs::path& store) {
  auto backend = [&](const char* name) {
    return nlohmann::json{{"name", name}, {"type", "scripted"}, {"tape", (tape_dir / (std::string(name) + ".tape")).string()}};
  };
  nlohmann::json cfg = {
      {"dataset", dataset_root.string()},
      {"store", store.string()},
      {"seed", 7},
      {"sample_fraction", 1.0},
      {"workers", 1},
      {"agent", {{"backend", "explorer"}, {"kinds", {"interaction", "static"}}}},
      {"generation",
       {{"generators", {{{"backend", "generator"}, {"postprocess", true}}}},
        {"postprocess_backend", "columns"},
        {"k", 15},
        {"rounds", 2},
        {"refinement", true}}},
      {"scaling", {{"backend", "generator"}, {"ks", {0, 3, 7, 15, 31}}, {"refinement", {false, true}}}},
      {"backends", {backend("explorer"), backend("generator"), backend("columns")}},
  };
  return cfg.dump(2) + "\n";
}

fs::path write_mini_bird_demo(const fs::path& dir) {
  build_mini_bird(dir / "mini_bird");
  write_text(dir / "explorer.tape", mini_bird_tape(Role::explorer));
  write_text(dir / "generator.tape", mini_bird_tape(Role::generator));
  write_text(dir / "columns.tape", mini_bird_tape(Role::columns));
  fs::path cfg = dir / "mini_bird.json";
  write_text(cfg, mini_bird_config("mini_bird", ".", "runs"));
  return cfg;
}

}  // namespace raisesql::fixtures
