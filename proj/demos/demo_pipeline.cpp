// Minimal library walkthrough: build the bundled demo source end to end,
// then query the result. Run it with no arguments.

#include <etl/etl.hpp>

#include <iostream>

int main() {
  auto ctx = etl::new_pipeline("demo-cars");

  using namespace etl::pipes;
  ctx | init() | extract() | transform() | load();

  std::cout << etl::status(ctx).render();

  auto result = ctx.db->query(
      "SELECT cyl, COUNT(*) AS n, AVG(mpg) AS mean_mpg FROM \"mtcars\" GROUP BY cyl");
  std::cout << "\ncyl  n  mean_mpg\n";
  for (const auto& row : result.rows)
    std::cout << etl::format_value(row[0]) << "    " << etl::format_value(row[1]) << "  "
              << etl::format_value(row[2]) << "\n";

  std::cout << "\nworking directory: " << ctx.dir.string() << "\n";
  return 0;
}
