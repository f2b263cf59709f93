import json
import math

COUNT = 0
CACHE = []


class Box:
    pass


def pure_add(a, b):
    return a + b


def pure_local_list(n):
    xs = []
    xs.append(n)
    return xs


def pure_local_dict(k):
    d = {}
    d["x"] = k
    return d


def pure_string(s):
    return s.upper()


def pure_read_list(xs):
    return xs[0] + 1


def global_counter():
    global COUNT
    COUNT = COUNT + 1
    return COUNT


def prints(x):
    print(x)


def appends_param(xs):
    xs.append(1)


def sets_field(o):
    o.v = 2


def updates_dict_param(d):
    d.update({"k": 1})


def alias_then_append(xs):
    ys = xs
    ys.append(2)


def appends_module_cache(x):
    CACHE.append(x)


def conditional_print(x):
    if x > 0:
        print(x)


def calls_prints(x):
    prints(x)


def calls_pure(a):
    return pure_add(a, 1)


def local_object_write():
    b = Box()
    b.v = 1
    return b


def _fill17(xs):
    xs.append(1)


def caller_of_mutator():
    xs = []
    _fill17(xs)
    return xs


def sorts_copy(xs):
    return sorted(xs)


def sqrt_of(x):
    return math.sqrt(x)


def sums(xs):
    return sum(xs)


def builds_tuple(a, b):
    return (a, b)


def len_of_wrapped(a):
    return len([a])


def reverses_param(xs):
    xs.reverse()


def sets_nested_field(o):
    o.inner.v = 3


def removes_key(d):
    d.pop("k", None)


def pops_from_copy(d):
    c = d.copy()
    c.pop("k", None)
    return c


def json_roundtrip(x):
    return json.dumps(x)


def guard_dead_print(x):
    if x > 10 ** 9:
        print(x)


def list_copy_then_append(s):
    parts = list(s)
    parts.append("end")
    return parts


def double_all(xs):
    return [x * 2 for x in xs]


pure_add(1, 2)
pure_local_list(3)
pure_local_dict("a")
pure_string("ab")
pure_read_list([1, 2])
global_counter()
prints(0)
appends_param([])
box = Box()
sets_field(box)
updates_dict_param({})
alias_then_append([])
appends_module_cache(1)
conditional_print(1)
calls_prints(2)
calls_pure(3)
local_object_write()
caller_of_mutator()
sorts_copy([2, 1])
sqrt_of(4)
sums([1, 2])
builds_tuple(1, 2)
len_of_wrapped(5)
reverses_param([1, 2])
nest = Box()
nest.inner = Box()
sets_nested_field(nest)
removes_key({"k": 1})
pops_from_copy({"k": 1})
json_roundtrip({"a": 1})
guard_dead_print(1)
list_copy_then_append("ab")
double_all([1, 2])
