"""Hand-written merge scenarios shared by several test modules."""

from pathlib import Path

DATA = Path(__file__).parent / "data"


def read(name: str) -> str:
    with open(DATA / name, encoding="utf-8", newline="") as fh:
        return fh.read()


# modifiers added on the same method header
MODIFIERS = (read("modifiers_base.mini"), read("modifiers_left.mini"), read("modifiers_right.mini"))

# two different fields appended to one class body
FIELDS_BASE = """public class Person {
    String name;

    String getName() {
        return name;
    }
}
"""
FIELDS_LEFT = FIELDS_BASE.replace("    String name;\n", "    String name;\n    String code;\n")
FIELDS_RIGHT = FIELDS_BASE.replace("    String name;\n", "    String name;\n    int age;\n")
FIELDS = (FIELDS_BASE, FIELDS_LEFT, FIELDS_RIGHT)

# overloads: each side edits the overload the other side deleted
OVERLOADS_BASE = """public class Solver {
    private long seed;

    public void init() {
        setup();
    }

    public void init(long seed) {
        setup();
    }
}
"""
OVERLOADS_LEFT = """public class Solver {
    public void init() {
        setup();
        reset();
    }
}
"""
OVERLOADS_RIGHT = """public class Solver {
    private long seed;

    public void init(long seed) {
        this.seed = seed;
        setup();
    }
}
"""
OVERLOADS = (OVERLOADS_BASE, OVERLOADS_LEFT, OVERLOADS_RIGHT)

# left retypes a field and uses it, right deletes the field
STOPWATCH_BASE = """public class Stopwatch {
    private long timeElapsed;
    private int laps;

    public static void main(String args) {
        start();
    }
}
"""
STOPWATCH_LEFT = STOPWATCH_BASE.replace("private long timeElapsed", "private double timeElapsed").replace(
    "        start();\n", "        start();\n        print(timeElapsed);\n"
)
STOPWATCH_RIGHT = STOPWATCH_BASE.replace("    private long timeElapsed;\n", "")
STOPWATCH = (STOPWATCH_BASE, STOPWATCH_LEFT, STOPWATCH_RIGHT)

# imports reordered on one side, one import added on the other
IMPORTS_BASE = """import java.util.List;
import java.util.Map;
import java.io.File;

class Registry {
    int size;
}
"""
IMPORTS_LEFT = """import java.io.File;
import java.util.List;
import java.util.Map;

class Registry {
    int size;
}
"""
IMPORTS_RIGHT = """import java.util.List;
import java.util.Map;
import java.io.File;
import java.net.URL;

class Registry {
    int size;
}
"""
IMPORTS = (IMPORTS_BASE, IMPORTS_LEFT, IMPORTS_RIGHT)
