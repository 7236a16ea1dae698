"""Writes corpus.jsonl: small Python programs with call specs for the
equivalence harness. Each program is exercised by every transformation."""

import json
import pathlib

CASES = []


def case(source, *calls):
    CASES.append({"source": source.strip("\n") + "\n", "calls": [
        {"function": c[0], "args": list(c[1:])} for c in calls]})


case("""
def accumulate(a, b):
    total = a
    total += b * 2
    return total
""", ("accumulate", 1, 2), ("accumulate", -3, 0))

case("""
def bump(a):
    a += 9
    return a
""", ("bump", 1), ("bump", -9))

case("""
def same(a, b):
    return a == b
""", ("same", 1, 1), ("same", 1, 2), ("same", "x", "x"))

case("""
def bigger(a, b):
    return a > b
""", ("bigger", 3, 2), ("bigger", 2, 2), ("bigger", -1, 5))

case("""
def mix(a, b, c):
    x = a + b * c
    return x
""", ("mix", 1, 2, 3), ("mix", 0.5, 2, -1))

case("""
def clamp(value, lo, hi):
    if value < lo:
        return lo
    if value > hi:
        return hi
    return value
""", ("clamp", 5, 0, 10), ("clamp", -2, 0, 10), ("clamp", 12, 0, 10))

case("""
def count_evens(numbers):
    count = 0
    for number in numbers:
        if number % 2 == 0:
            count += 1
    return count
""", ("count_evens", [1, 2, 3, 4, 6]), ("count_evens", []))

case("""
def mean(values):
    total = 0
    for value in values:
        total += value
    return total / len(values)
""", ("mean", [1, 2, 3]), ("mean", []))

case("""
def fizz(n):
    out = []
    for i in range(1, n + 1):
        if i % 15 == 0:
            out.append("FizzBuzz")
        elif i % 3 == 0:
            out.append("Fizz")
        elif i % 5 == 0:
            out.append("Buzz")
        else:
            out.append(str(i))
    return out
""", ("fizz", 16))

case("""
def factorial(n):
    result = 1
    while n > 1:
        result *= n
        n -= 1
    return result
""", ("factorial", 5), ("factorial", 0))

case("""
def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a
""", ("fib", 10), ("fib", 1))

case("""
def poly(x):
    y = 3 * x * x + 2 * x + 1
    return y
""", ("poly", 2), ("poly", -1.5))

case("""
def area(width, height):
    size = width * height
    return size
""", ("area", 3, 4))

case("""
def hypot2(a, b):
    c = a * a + b * b
    return c
""", ("hypot2", 3, 4))

case("""
def reverse_words(text):
    words = text.split()
    words.reverse()
    return " ".join(words)
""", ("reverse_words", "a b c"), ("reverse_words", ""))

case("""
def max_of(numbers):
    best = numbers[0]
    for number in numbers[1:]:
        if number > best:
            best = number
    return best
""", ("max_of", [3, 9, 2]), ("max_of", []))

case("""
def min_of(numbers):
    best = numbers[0]
    for number in numbers:
        if best > number:
            best = number
    return best
""", ("min_of", [3, 9, 2]))

case("""
def is_palindrome(text):
    cleaned = text.lower()
    return cleaned == cleaned[::-1]
""", ("is_palindrome", "Abba"), ("is_palindrome", "abc"))

case("""
def sum_squares(n):
    total = 0
    for i in range(n):
        total += i * i
    return total
""", ("sum_squares", 10))

case("""
def greet(name):
    message = "Hello, " + name
    message += "!"
    print(message)
    return len(message)
""", ("greet", "Ada"))

case("""
def between(x, lo, hi):
    return lo <= x and x <= hi
""", ("between", 3, 1, 5), ("between", 0, 1, 5))

case("""
def at_least(x, y):
    return x >= y
""", ("at_least", 2, 2), ("at_least", 1, 2))

case("""
def sign(x):
    if x > 0:
        return 1
    elif x == 0:
        return 0
    return -1
""", ("sign", 5), ("sign", 0), ("sign", -2))

case("""
def dedupe(items):
    seen = set()
    output = []
    for item in items:
        if item not in seen:
            seen.add(item)
            output.append(item)
    return output
""", ("dedupe", [1, 2, 1, 3, 2]))

case("""
def histogram(words):
    counts = {}
    for word in words:
        counts[word] = counts.get(word, 0) + 1
    return counts
""", ("histogram", ["a", "b", "a"]))

case("""
def dot(xs, ys):
    acc = 0
    for x, y in zip(xs, ys):
        acc += x * y
    return acc
""", ("dot", [1, 2, 3], [4, 5, 6]))

case("""
def scale(xs, k):
    return [x * k for x in xs]
""", ("scale", [1, 2], 3))

case("""
def running(xs):
    total = 0
    out = []
    for x in xs:
        total += x
        out.append(total)
    return out
""", ("running", [1, 2, 3, 4]))

case("""
def gcd(a, b):
    while b != 0:
        a, b = b, a % b
    return a
""", ("gcd", 48, 18), ("gcd", 7, 0))

case("""
def power(base, exp):
    result = 1
    for _ in range(exp):
        result = result * base
    return result
""", ("power", 2, 10))

case("""
def celsius(f):
    c = (f - 32) * 5 / 9
    return round(c, 6)
""", ("celsius", 212), ("celsius", -40))

case("""
def bmi(weight, height):
    index = weight / (height * height)
    return round(index, 3)
""", ("bmi", 70, 1.75))

case("""
def interest(principal, rate, years):
    amount = principal * (1 + rate) ** years
    return round(amount, 4)
""", ("interest", 100, 0.05, 3))

case("""
def vowels(text):
    count = 0
    for ch in text:
        if ch in "aeiou":
            count += 1
    return count
""", ("vowels", "education"))

case("""
def safe_div(a, b):
    try:
        result = a / b
    except ZeroDivisionError as error:
        result = str(error)
    return result
""", ("safe_div", 1, 2), ("safe_div", 1, 0))

case("""
def find(items, target):
    index = 0
    for item in items:
        if item == target:
            return index
        index += 1
    return -1
""", ("find", [4, 5, 6], 5), ("find", [], 1))

case("""
def binary_search(items, target):
    left = 0
    right = len(items) - 1
    while left <= right:
        middle = (left + right) // 2
        if items[middle] == target:
            return middle
        if items[middle] < target:
            left = middle + 1
        else:
            right = middle - 1
    return -1
""", ("binary_search", [1, 3, 5, 7, 9], 7), ("binary_search", [1, 3], 2))

case("""
def bubble(items):
    data = list(items)
    n = len(data)
    for i in range(n):
        for j in range(n - i - 1):
            if data[j] > data[j + 1]:
                data[j], data[j + 1] = data[j + 1], data[j]
    return data
""", ("bubble", [5, 1, 4, 2, 8]))

case("""
def transpose(matrix):
    rows = len(matrix)
    cols = len(matrix[0])
    result = [[0] * rows for _ in range(cols)]
    for r in range(rows):
        for c in range(cols):
            result[c][r] = matrix[r][c]
    return result
""", ("transpose", [[1, 2, 3], [4, 5, 6]]))

case("""
def flatten(nested):
    flat = []
    for sub in nested:
        flat += sub
    return flat
""", ("flatten", [[1], [2, 3], []]))

case("""
def chunk(items, size):
    out = []
    start = 0
    while start < len(items):
        out.append(items[start:start + size])
        start += size
    return out
""", ("chunk", [1, 2, 3, 4, 5], 2))

case("""
def capitalize_all(words):
    result = []
    for word in words:
        result.append(word[:1].upper() + word[1:])
    return result
""", ("capitalize_all", ["ab", "c", ""]))

case("""
def counter():
    count = 0
    def step():
        return count + 1
    count = step()
    return count
""", ("counter",))

case("""
def make_adder(n):
    offset = n * 2
    def add(x):
        return x + offset
    return add(10)
""", ("make_adder", 3))

case("""
def nonlocal_counter(k):
    total = 0
    def inc():
        nonlocal total
        total += k
    inc()
    inc()
    return total
""", ("nonlocal_counter", 4))

case("""
LIMIT = 10

def under_limit(x):
    return x < LIMIT
""", ("under_limit", 3), ("under_limit", 12))

case("""
state = {"n": 0}

def tick(k):
    state["n"] += k
    return state["n"]
""", ("tick", 2))

case("""
def walrus(items):
    if (n := len(items)) > 2:
        return n
    return 0
""", ("walrus", [1, 2, 3]), ("walrus", []))

case("""
def fstring(name, score):
    label = f"{name}: {score * 2}"
    return label
""", ("fstring", "x", 4))

case("""
def comprehension_total(xs):
    squares = [x * x for x in xs if x > 0]
    return sum(squares)
""", ("comprehension_total", [-1, 2, 3]))

case("""
def dict_invert(mapping):
    inverted = {value: key for key, value in mapping.items()}
    return inverted
""", ("dict_invert", {"a": 1, "b": 2}))

case("""
def lambda_sort(pairs):
    ordered = sorted(pairs, key=lambda p: p[1])
    return ordered
""", ("lambda_sort", [[1, "b"], [2, "a"]]))

case("""
def tuple_swap(a, b):
    first, second = b, a
    return first - second
""", ("tuple_swap", 5, 3))

case("""
def nested_if(a, b):
    if a > b:
        if a == 10:
            return "ten"
        return "big"
    return "small"
""", ("nested_if", 10, 1), ("nested_if", 5, 1), ("nested_if", 0, 1))

case("""
def string_math(s):
    n = len(s)
    n -= 1
    return s[n] if n >= 0 else ""
""", ("string_math", "abc"), ("string_math", ""))

case("""
def compare_strings(a, b):
    return a < b
""", ("compare_strings", "apple", "banana"), ("compare_strings", "b", "a"))

case("""
def chained(x):
    return 0 < x < 10
""", ("chained", 5), ("chained", 11))

case("""
def raises(x):
    if x == 0:
        raise ValueError("zero")
    return 1 / x
""", ("raises", 0), ("raises", 4))

case("""
def with_default(x, y=3):
    z = x + y * 2
    return z
""", ("with_default", 1), ("with_default", 1, 0))

case("""
def kwargs_total(**parts):
    total = 0
    for key in sorted(parts):
        total += parts[key]
    return total
""", ("kwargs_total",))

case("""
def varargs(*xs):
    acc = 1
    for x in xs:
        acc *= x
    return acc
""", ("varargs", 2, 3, 4))

case("""
class Stack:
    def __init__(self):
        self.items = []

    def push(self, item):
        self.items.append(item)
        return len(self.items)

def use_stack(n):
    stack = Stack()
    size = 0
    for i in range(n):
        size = stack.push(i)
    return size
""", ("use_stack", 4))

case("""
class Point:
    def __init__(self, x, y):
        self.x = x
        self.y = y

    def norm2(self):
        return self.x * self.x + self.y * self.y

def point_norm(a, b):
    point = Point(a, b)
    return point.norm2()
""", ("point_norm", 3, 4))

case("""
class Counter:
    def __init__(self):
        self.count = 0

    def bump(self, k):
        self.count += k
        return self.count

def bump_twice(k):
    c = Counter()
    c.bump(k)
    return c.bump(k)
""", ("bump_twice", 5))

case("""
def matrix_sum(matrix):
    total = 0
    for row in matrix:
        for cell in row:
            total += cell
    return total
""", ("matrix_sum", [[1, 2], [3, 4]]))

case("""
def diag(matrix):
    out = []
    for i in range(len(matrix)):
        out.append(matrix[i][i])
    return out
""", ("diag", [[1, 2], [3, 4]]))

case("""
def word_lengths(text):
    lengths = []
    for word in text.split():
        lengths.append(len(word))
    return lengths
""", ("word_lengths", "hello big world"))

case("""
def longest(words):
    best = ""
    for word in words:
        if len(word) > len(best):
            best = word
    return best
""", ("longest", ["a", "abc", "ab"]))

case("""
def collatz(n):
    steps = 0
    while n != 1:
        if n % 2 == 0:
            n = n // 2
        else:
            n = 3 * n + 1
        steps += 1
    return steps
""", ("collatz", 27))

case("""
def primes(limit):
    found = []
    for candidate in range(2, limit):
        is_prime = True
        for p in found:
            if candidate % p == 0:
                is_prime = False
                break
        if is_prime:
            found.append(candidate)
    return found
""", ("primes", 30))

case("""
def digits_sum(n):
    total = 0
    while n > 0:
        total += n % 10
        n //= 10
    return total
""", ("digits_sum", 9875))

case("""
def reverse_number(n):
    rev = 0
    while n > 0:
        rev = rev * 10 + n % 10
        n = n // 10
    return rev
""", ("reverse_number", 1234))

case("""
def average_grade(grades):
    total = sum(grades)
    count = len(grades)
    if count == 0:
        return None
    return total / count
""", ("average_grade", [90, 80]), ("average_grade", []))

case("""
def grade(score):
    if score >= 90:
        return "A"
    if score >= 80:
        return "B"
    return "C"
""", ("grade", 95), ("grade", 85), ("grade", 10))

case("""
def leap(year):
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
""", ("leap", 2000), ("leap", 1900), ("leap", 2024))

case("""
def triangle(a, b, c):
    if a + b > c and a + c > b and b + c > a:
        return True
    return False
""", ("triangle", 3, 4, 5), ("triangle", 1, 1, 3))

case("""
def discount(price, percent):
    cut = price * percent / 100
    price -= cut
    return round(price, 2)
""", ("discount", 80, 25))

case("""
def pairs(n):
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            out.append((i, j))
    return out
""", ("pairs", 4))

case("""
def merge(a, b):
    i = 0
    j = 0
    out = []
    while i < len(a) and j < len(b):
        if a[i] <= b[j]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    return out + a[i:] + b[j:]
""", ("merge", [1, 4, 6], [2, 3, 7]))

case("""
def rle(text):
    out = []
    prev = None
    run = 0
    for ch in text:
        if ch == prev:
            run += 1
        else:
            if prev is not None:
                out.append(prev + str(run))
            prev = ch
            run = 1
    if prev is not None:
        out.append(prev + str(run))
    return "".join(out)
""", ("rle", "aaabccdd"), ("rle", ""))

case("""
def caesar(text, shift):
    out = ""
    for ch in text:
        if "a" <= ch <= "z":
            code = ord(ch) - ord("a")
            code = (code + shift) % 26
            out += chr(code + ord("a"))
        else:
            out += ch
    return out
""", ("caesar", "hello, world", 3))

case("""
def anagram(a, b):
    return sorted(a) == sorted(b)
""", ("anagram", "listen", "silent"), ("anagram", "a", "b"))

case("""
def second_largest(numbers):
    first = None
    second = None
    for number in numbers:
        if first is None or number > first:
            second = first
            first = number
        elif number != first and (second is None or number > second):
            second = number
    return second
""", ("second_largest", [3, 1, 4, 4, 2]))

case("""
def mode(values):
    counts = {}
    for value in values:
        counts[value] = counts.get(value, 0) + 1
    best = None
    for key in sorted(counts):
        if best is None or counts[key] > counts[best]:
            best = key
    return best
""", ("mode", [1, 2, 2, 3, 3, 3]))

case("""
def variance(xs):
    n = len(xs)
    m = sum(xs) / n
    acc = 0.0
    for x in xs:
        acc += (x - m) * (x - m)
    return acc / n
""", ("variance", [1.0, 2.0, 4.0]))

case("""
def normalize(xs):
    lo = min(xs)
    hi = max(xs)
    span = hi - lo
    return [(x - lo) / span for x in xs]
""", ("normalize", [1, 2, 3]), ("normalize", [2, 2]))

case("""
def print_table(n):
    for i in range(1, n + 1):
        line = ""
        for j in range(1, n + 1):
            line += str(i * j) + " "
        print(line)
    return n
""", ("print_table", 3))

case("""
def countdown(n):
    while n > 0:
        print(n)
        n -= 1
    print("go")
""", ("countdown", 3))

case("""
def guarded_index(items, k):
    try:
        value = items[k]
    except IndexError:
        value = None
    finally:
        k += 1
    return value, k
""", ("guarded_index", [1, 2], 1), ("guarded_index", [1, 2], 5))

case("""
def file_like(lines):
    buffer = []
    for line in lines:
        stripped = line.strip()
        if stripped == "":
            continue
        buffer.append(stripped)
    return buffer
""", ("file_like", [" a ", "", "b"]))

case("""
def with_context(values):
    import contextlib
    total = 0
    with contextlib.suppress(TypeError) as ctx:
        for v in values:
            total += v
    return total
""", ("with_context", [1, 2, "x", 3]))

case("""
def bits(n):
    ones = 0
    while n:
        ones += n & 1
        n >>= 1
    return ones
""", ("bits", 255), ("bits", 0))

case("""
def xor_all(xs):
    acc = 0
    for x in xs:
        acc ^= x
    return acc
""", ("xor_all", [1, 2, 3, 4]))

case("""
def shift_mix(a, b):
    r = a << 2 | b >> 1
    return r
""", ("shift_mix", 3, 8))

case("""
def bool_logic(a, b, c):
    result = a and b or c
    return result
""", ("bool_logic", True, False, True), ("bool_logic", 0, 1, 0))

case("""
def unary(x):
    y = -x + abs(x) * 2
    return y
""", ("unary", -3), ("unary", 4))

case("""
def str_repeat(s, n):
    out = s * n + "|" + s
    return out
""", ("str_repeat", "ab", 3))

case("""
def list_concat(a, b):
    merged = a + b * 2
    return merged
""", ("list_concat", [1], [2, 3]))

case("""
def sub_chain(a, b, c):
    d = a - b - c
    return d
""", ("sub_chain", 10, 3, 2))

case("""
def div_chain(a, b, c):
    q = a / b / c
    return q
""", ("div_chain", 100, 5, 2))

case("""
def mod_mix(a, b):
    r = a % b + a // b * b
    return r
""", ("mod_mix", 17, 5))

case("""
def attr_update(obj_list):
    total = 0
    for item in obj_list:
        total += item["w"] * item["h"]
    return total
""", ("attr_update", [{"w": 2, "h": 3}, {"w": 1, "h": 1}]))

case("""
def mutable_aug(xs):
    copy = list(xs)
    copy += [len(xs)]
    return copy
""", ("mutable_aug", [1, 2]))

case("""
def set_ops(a, b):
    common = set(a) & set(b)
    return sorted(common)
""", ("set_ops", [1, 2, 3], [2, 3, 4]))

case("""
def early_exit(xs, limit):
    total = 0
    for x in xs:
        if total + x > limit:
            break
        total += x
    return total
""", ("early_exit", [5, 5, 5, 5], 12))

case("""
def while_else(n):
    k = 2
    while k * k <= n:
        if n % k == 0:
            return k
        k += 1
    else:
        return n
""", ("while_else", 91), ("while_else", 97))

case("""
def for_else(xs, t):
    for x in xs:
        if x == t:
            break
    else:
        return "missing"
    return "found"
""", ("for_else", [1, 2], 2), ("for_else", [1, 2], 3))

case("""
def none_check(x):
    if x is None:
        return 0
    return x == 0
""", ("none_check", None), ("none_check", 0))

case("""
def float_cmp(a, b):
    return a < b, a > b, a == b
""", ("float_cmp", 0.1, 0.2), ("float_cmp", float("nan") if False else 1.0, 1.0))

case("""
def ternary(x):
    label = "pos" if x > 0 else "nonpos"
    return label
""", ("ternary", 1), ("ternary", -1))

case("""
def generator_sum(n):
    total = sum(i * i for i in range(n))
    return total
""", ("generator_sum", 5))

case("""
def enumerate_pairs(items):
    out = {}
    for index, item in enumerate(items):
        out[item] = index
    return out
""", ("enumerate_pairs", ["a", "b"]))

case("""
def recursive_sum(xs):
    if len(xs) == 0:
        return 0
    return xs[0] + recursive_sum(xs[1:])
""", ("recursive_sum", [1, 2, 3]))

case("""
def memo_fib(n, cache=None):
    if cache is None:
        cache = {}
    if n < 2:
        return n
    if n in cache:
        return cache[n]
    value = memo_fib(n - 1, cache) + memo_fib(n - 2, cache)
    cache[n] = value
    return value
""", ("memo_fib", 20))

case("""
def type_error(a):
    result = a + 1
    return result
""", ("type_error", "x"), ("type_error", 1))

case("""
def keyword_call(a, b):
    text = "-".join([str(a), str(b)])
    total = int(a) + int(b) * 3
    return text, total
""", ("keyword_call", 1, 2))

case("""
def sorted_desc(xs):
    ordered = sorted(xs, reverse=True)
    top = ordered[0] if ordered else None
    return top
""", ("sorted_desc", [3, 7, 1]), ("sorted_desc", []))

case("""
def annotated(x: int) -> int:
    doubled: int = x * 2
    doubled += 1
    return doubled
""", ("annotated", 4))

case("""
def unicode_text(s):
    marked = s + "é"
    return len(marked), marked
""", ("unicode_text", "caf"))

case("""
def dict_merge(a, b):
    merged = dict(a)
    for key, value in b.items():
        if key in merged:
            merged[key] += value
        else:
            merged[key] = value
    return merged
""", ("dict_merge", {"x": 1}, {"x": 2, "y": 3}))

case("""
def staircase(n):
    rows = []
    for i in range(1, n + 1):
        rows.append(" " * (n - i) + "#" * i)
    return "\\n".join(rows)
""", ("staircase", 4))

case("""
def quadratic(a, b, c):
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    root = disc ** 0.5
    return ((-b + root) / (2 * a), (-b - root) / (2 * a))
""", ("quadratic", 1, -3, 2), ("quadratic", 1, 0, 1))


def main():
    out = pathlib.Path(__file__).with_name("corpus.jsonl")
    with out.open("w", encoding="utf-8") as f:
        for k, c in enumerate(CASES, 1):
            f.write(json.dumps({"id": "sect_%03d" % k, **c}, ensure_ascii=False) + "\n")
    print(len(CASES), "cases")


if __name__ == "__main__":
    main()
