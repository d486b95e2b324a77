"""Built-in problem bank for the synthetic corpus.

Each entry has a correct reference solution, the inputs of its test suite and
the bug injectors its reference admits. Expected outputs are produced by
running the reference, so the suite passes the reference by construction.
"""
from __future__ import annotations

from ..minilang import Problem, Signature, TestCase, execute, parse_source
from ..minilang.values import from_literal

BANK = {
    "zipZap": {
        "topic": "String",
        "reference": """public String zipZap(String str) {
  String result = "";
  int length = str.length();
  for (int i = 0; i < length; i++) {
    if (i + 2 < length && str.charAt(i) == 'z' && str.charAt(i + 2) == 'p') {
      result = result + "zp";
      i = i + 2;
    } else {
      result = result + str.charAt(i);
    }
  }
  return result;
}
""",
        "inputs": [["zipXzap"], ["zopzop"], ["zzzopzop"], ["zibzap"], ["zip"],
                   ["zi"], ["abc"], ["azbcppzzp"]],
        "injectors": ["off_by_one", "flip_comparison", "index_constant", "missing_else"],
    },
    "xyBalance": {
        "topic": "String",
        "reference": """public boolean xyBalance(String str) {
  int lastX = str.lastIndexOf("x");
  if (lastX == -1) {
    return true;
  }
  for (int i = lastX; i < str.length(); i++) {
    if (str.charAt(i) == 'y') {
      return true;
    }
  }
  return false;
}
""",
        "inputs": [["aaxbby"], ["aaxbb"], ["yaaxbb"], ["yaaxbby"], ["xaxxbby"],
                   ["xaxxbbyx"], ["xxbxy"], ["bbb"], ["xy"]],
        "injectors": ["off_by_one", "flip_comparison", "wrong_return_literal"],
    },
    "getSandwich": {
        "topic": "String",
        "reference": """public String getSandwich(String str) {
  int first = str.indexOf("bread");
  int last = str.lastIndexOf("bread");
  if (first == last) {
    return "";
  }
  return str.substring(first + 5, last);
}
""",
        "inputs": [["breadjambread"], ["xxbreadjambreadyy"], ["xxbreadyy"],
                   ["xxbreadbreadjambreadyy"], ["breadbread"], ["breadbreaxbread"],
                   ["breadbreadbreadbread"], ["jam"]],
        "injectors": ["flip_comparison", "index_constant", "wrong_return_literal"],
    },
    "frontTimes": {
        "topic": "String",
        "reference": """public String frontTimes(String str, int n) {
  int frontLen = 3;
  if (frontLen > str.length()) {
    frontLen = str.length();
  }
  String front = str.substring(0, frontLen);
  String result = "";
  for (int i = 0; i < n; i++) {
    result = result + front;
  }
  return result;
}
""",
        "inputs": [["Chocolate", 2], ["Chocolate", 3], ["Abc", 3], ["Ab", 4], ["A", 4],
                   ["", 4], ["Abc", 0], ["Chocolate", 1]],
        "injectors": ["off_by_one", "flip_comparison", "index_constant"],
    },
    "countEvens": {
        "topic": "Array",
        "reference": """public int countEvens(int[] nums) {
  int count = 0;
  for (int i = 0; i < nums.length; i++) {
    if (nums[i] % 2 == 0) {
      count++;
    }
  }
  return count;
}
""",
        "inputs": [[[2, 1, 2, 3, 4]], [[2, 2, 0]], [[1, 3, 5]], [[]], [[11, 9, 0, 1]],
                   [[2, 11, 9, 0]], [[2]], [[1, 2]]],
        "injectors": ["off_by_one", "flip_comparison"],
    },
    "has22": {
        "topic": "Array",
        "reference": """public boolean has22(int[] nums) {
  for (int i = 0; i < nums.length - 1; i++) {
    if (nums[i] == 2 && nums[i + 1] == 2) {
      return true;
    }
  }
  return false;
}
""",
        "inputs": [[[1, 2, 2]], [[1, 2, 1, 2]], [[2, 1, 2]], [[2, 2, 1, 2]], [[1, 3, 2]],
                   [[1, 3, 2, 2]], [[2, 3, 2, 2]], [[4, 2, 4, 2, 2, 5]], [[1, 2]], [[2, 2]]],
        "injectors": ["off_by_one", "flip_comparison", "index_constant", "wrong_return_literal"],
    },
    "bigDiff": {
        "topic": "Array",
        "reference": """public int bigDiff(int[] nums) {
  int largest = nums[0];
  int smallest = nums[0];
  for (int i = 1; i < nums.length; i++) {
    if (nums[i] > largest) {
      largest = nums[i];
    }
    if (nums[i] < smallest) {
      smallest = nums[i];
    }
  }
  return largest - smallest;
}
""",
        "inputs": [[[10, 3, 5, 6]], [[7, 2, 10, 9]], [[2, 10, 7, 2]], [[2, 10]], [[10, 2]],
                   [[10, 0]], [[2, 3]], [[2, 2]], [[2]], [[5, 1, 6, 1, 9, 9]]],
        "injectors": ["off_by_one", "flip_comparison", "index_constant"],
    },
    "caughtSpeeding": {
        "topic": "If-else",
        "reference": """public int caughtSpeeding(int speed, boolean isBirthday) {
  int bonus = 0;
  if (isBirthday) {
    bonus = 5;
  }
  if (speed <= 60 + bonus) {
    return 0;
  } else if (speed <= 80 + bonus) {
    return 1;
  } else {
    return 2;
  }
}
""",
        "inputs": [[60, False], [65, False], [65, True], [80, False], [85, False],
                   [85, True], [70, False], [75, False], [40, False], [90, False]],
        "injectors": ["flip_comparison", "missing_else", "wrong_return_literal"],
    },
    "sortaSum": {
        "topic": "If-else",
        "reference": """public int sortaSum(int a, int b) {
  int sum = a + b;
  if (sum >= 10 && sum <= 19) {
    return 20;
  }
  return sum;
}
""",
        "inputs": [[3, 4], [9, 4], [10, 11], [12, -3], [-3, 12], [4, 5], [4, 6], [14, 7]],
        "injectors": ["flip_comparison", "wrong_return_literal"],
    },
    "dateFashion": {
        "topic": "If-else",
        "reference": """public int dateFashion(int you, int date) {
  if (you <= 2 || date <= 2) {
    return 0;
  } else if (you >= 8 || date >= 8) {
    return 2;
  } else {
    return 1;
  }
}
""",
        "inputs": [[5, 10], [5, 2], [5, 5], [3, 3], [10, 2], [2, 9], [9, 9], [10, 5],
                   [2, 2], [3, 7], [2, 7], [6, 2]],
        "injectors": ["flip_comparison", "missing_else", "wrong_return_literal"],
    },
}


def make_problem(problem_id: str) -> Problem:
    """Build a :class:`Problem` whose expected outputs come from the reference."""
    entry = BANK[problem_id]
    fn = parse_source(entry["reference"])
    params = tuple((p.name, p.type) for p in fn.params)
    sig = Signature(fn.name, params, fn.return_type)
    tests = []
    for k, raw in enumerate(entry["inputs"]):
        inputs = tuple(from_literal(v, ty) for v, (_, ty) in zip(raw, params))
        out = execute(fn, list(inputs))
        if out.status != "value":
            raise RuntimeError(f"reference for {problem_id} fails on {raw}: {out.error}")
        tests.append(TestCase(f"t{k}", inputs, out.result))
    return Problem(problem_id, sig, tests, entry["topic"], entry["reference"])
