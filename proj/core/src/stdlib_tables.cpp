#include "envsniff/stdlib_tables.hpp"

namespace envsniff {

namespace {

// module lists per interpreter line, top-level names only

const std::set<std::string, std::less<>>& stdlib_27() {
  static const std::set<std::string, std::less<>> t{
      "BaseHTTPServer",
      "Bastion",
      "CGIHTTPServer",
      "Canvas",
      "ConfigParser",
      "Cookie",
      "Dialog",
      "DocXMLRPCServer",
      "FileDialog",
      "HTMLParser",
      "MimeWriter",
      "Queue",
      "ScrolledText",
      "SimpleDialog",
      "SimpleHTTPServer",
      "SimpleXMLRPCServer",
      "SocketServer",
      "StringIO",
      "Tix",
      "Tkconstants",
      "Tkdnd",
      "Tkinter",
      "UserDict",
      "UserList",
      "UserString",
      "__builtin__",
      "__future__",
      "__main__",
      "_winreg",
      "abc",
      "aifc",
      "anydbm",
      "argparse",
      "array",
      "ast",
      "asynchat",
      "asyncore",
      "atexit",
      "audiodev",
      "audioop",
      "base64",
      "bdb",
      "binascii",
      "binhex",
      "bisect",
      "bsddb",
      "bz2",
      "cPickle",
      "cProfile",
      "cStringIO",
      "calendar",
      "cgi",
      "cgitb",
      "chunk",
      "cmath",
      "cmd",
      "code",
      "codecs",
      "codeop",
      "collections",
      "colorsys",
      "commands",
      "compileall",
      "compiler",
      "contextlib",
      "cookielib",
      "copy",
      "copy_reg",
      "crypt",
      "csv",
      "ctypes",
      "curses",
      "datetime",
      "dbhash",
      "decimal",
      "difflib",
      "dircache",
      "dis",
      "distutils",
      "dl",
      "doctest",
      "dumbdbm",
      "dummy_thread",
      "dummy_threading",
      "email",
      "encodings",
      "errno",
      "exceptions",
      "fcntl",
      "filecmp",
      "fileinput",
      "fnmatch",
      "formatter",
      "fpformat",
      "fractions",
      "ftplib",
      "functools",
      "future_builtins",
      "gc",
      "gdbm",
      "genericpath",
      "getopt",
      "getpass",
      "gettext",
      "glob",
      "grp",
      "gzip",
      "hashlib",
      "heapq",
      "hmac",
      "hotshot",
      "htmlentitydefs",
      "htmllib",
      "httplib",
      "ihooks",
      "imageop",
      "imaplib",
      "imghdr",
      "imp",
      "imputil",
      "inspect",
      "io",
      "itertools",
      "json",
      "keyword",
      "lib2to3",
      "linecache",
      "locale",
      "logging",
      "macpath",
      "mailbox",
      "markupbase",
      "marshal",
      "math",
      "md5",
      "mhlib",
      "mimetools",
      "mimetypes",
      "mimify",
      "mmap",
      "modulefind",
      "modulefinder",
      "msvcrt",
      "multifile",
      "multiprocessing",
      "mutex",
      "netrc",
      "new",
      "nis",
      "nntplib",
      "ntpath",
      "numbers",
      "operator",
      "optparse",
      "os",
      "ossaudiodev",
      "parser",
      "pdb",
      "pickle",
      "pipes",
      "pkgutil",
      "platform",
      "plistlib",
      "popen2",
      "poplib",
      "posix",
      "posixfile",
      "posixpath",
      "pprint",
      "profile",
      "pstats",
      "pty",
      "pwd",
      "py_compile",
      "pyclbr",
      "pydoc",
      "quopri",
      "random",
      "re",
      "readline",
      "repr",
      "resource",
      "rexec",
      "rfc822",
      "rlcompleter",
      "robotparser",
      "runpy",
      "sched",
      "select",
      "sets",
      "sgmllib",
      "sha",
      "shelve",
      "shlex",
      "shutil",
      "signal",
      "site",
      "smtpd",
      "smtplib",
      "sndhdr",
      "socket",
      "spwd",
      "sqlite3",
      "sre",
      "ssl",
      "stat",
      "statvfs",
      "string",
      "stringprep",
      "struct",
      "subprocess",
      "sunau",
      "sunaudio",
      "symbol",
      "sys",
      "syslog",
      "tabnanny",
      "tarfile",
      "telnetlib",
      "tempfile",
      "termios",
      "test",
      "textwrap",
      "thread",
      "threading",
      "time",
      "timeit",
      "tkColorChooser",
      "tkCommonDialog",
      "tkFileDialog",
      "tkFont",
      "tkMessageBox",
      "tkSimpleDialog",
      "toaiff",
      "token",
      "tokenize",
      "trace",
      "traceback",
      "ttk",
      "tty",
      "turtle",
      "types",
      "unicodedata",
      "unittest",
      "urllib",
      "urllib2",
      "urlparse",
      "user",
      "uu",
      "uuid",
      "warnings",
      "wave",
      "weakref",
      "webbrowser",
      "whichdb",
      "winsound",
      "wsgiref",
      "xdrlib",
      "xml",
      "xmlrpclib",
      "zipfile",
      "zipimport",
      "zlib"};
  return t;
}

const std::set<std::string, std::less<>>& stdlib_36() {
  static const std::set<std::string, std::less<>> t{
      "__future__",
      "_abc",
      "_aix_support",
      "_ast",
      "_asyncio",
      "_bisect",
      "_blake2",
      "_bootsubprocess",
      "_bz2",
      "_codecs",
      "_codecs_cn",
      "_codecs_hk",
      "_codecs_iso2022",
      "_codecs_jp",
      "_codecs_kr",
      "_codecs_tw",
      "_collections",
      "_collections_abc",
      "_compat_pickle",
      "_compression",
      "_crypt",
      "_csv",
      "_ctypes",
      "_curses",
      "_curses_panel",
      "_datetime",
      "_dbm",
      "_decimal",
      "_dummy_thread",
      "_elementtree",
      "_frozen_importlib",
      "_frozen_importlib_external",
      "_functools",
      "_gdbm",
      "_hashlib",
      "_heapq",
      "_imp",
      "_io",
      "_json",
      "_locale",
      "_lsprof",
      "_lzma",
      "_markupbase",
      "_md5",
      "_msi",
      "_multibytecodec",
      "_multiprocessing",
      "_opcode",
      "_operator",
      "_osx_support",
      "_overlapped",
      "_pickle",
      "_posixshmem",
      "_posixsubprocess",
      "_py_abc",
      "_pydecimal",
      "_pyio",
      "_queue",
      "_random",
      "_scproxy",
      "_sha1",
      "_sha256",
      "_sha3",
      "_sha512",
      "_signal",
      "_sitebuiltins",
      "_socket",
      "_sqlite3",
      "_sre",
      "_ssl",
      "_stat",
      "_statistics",
      "_string",
      "_strptime",
      "_struct",
      "_symtable",
      "_thread",
      "_threading_local",
      "_tkinter",
      "_tracemalloc",
      "_uuid",
      "_warnings",
      "_weakref",
      "_weakrefset",
      "_winapi",
      "abc",
      "aifc",
      "antigravity",
      "argparse",
      "array",
      "ast",
      "asynchat",
      "asyncio",
      "asyncore",
      "atexit",
      "audioop",
      "base64",
      "bdb",
      "binascii",
      "binhex",
      "bisect",
      "builtins",
      "bz2",
      "cProfile",
      "calendar",
      "cgi",
      "cgitb",
      "chunk",
      "cmath",
      "cmd",
      "code",
      "codecs",
      "codeop",
      "collections",
      "colorsys",
      "compileall",
      "concurrent",
      "configparser",
      "contextlib",
      "copy",
      "copyreg",
      "crypt",
      "csv",
      "ctypes",
      "curses",
      "datetime",
      "dbm",
      "decimal",
      "difflib",
      "dis",
      "distutils",
      "doctest",
      "dummy_threading",
      "email",
      "encodings",
      "ensurepip",
      "enum",
      "errno",
      "faulthandler",
      "fcntl",
      "filecmp",
      "fileinput",
      "fnmatch",
      "formatter",
      "fractions",
      "ftplib",
      "functools",
      "gc",
      "genericpath",
      "getopt",
      "getpass",
      "gettext",
      "glob",
      "grp",
      "gzip",
      "hashlib",
      "heapq",
      "hmac",
      "html",
      "http",
      "idlelib",
      "imaplib",
      "imghdr",
      "imp",
      "importlib",
      "inspect",
      "io",
      "ipaddress",
      "itertools",
      "json",
      "keyword",
      "lib2to3",
      "linecache",
      "locale",
      "logging",
      "lzma",
      "macpath",
      "mailbox",
      "mailcap",
      "marshal",
      "math",
      "mimetypes",
      "mmap",
      "modulefinder",
      "msilib",
      "msvcrt",
      "multiprocessing",
      "netrc",
      "nis",
      "nntplib",
      "nt",
      "ntpath",
      "nturl2path",
      "numbers",
      "opcode",
      "operator",
      "optparse",
      "os",
      "ossaudiodev",
      "parser",
      "pathlib",
      "pdb",
      "pickle",
      "pickletools",
      "pipes",
      "pkgutil",
      "platform",
      "plistlib",
      "poplib",
      "posix",
      "posixpath",
      "pprint",
      "profile",
      "pstats",
      "pty",
      "pwd",
      "py_compile",
      "pyclbr",
      "pydoc",
      "pydoc_data",
      "pyexpat",
      "queue",
      "quopri",
      "random",
      "re",
      "readline",
      "reprlib",
      "resource",
      "rlcompleter",
      "runpy",
      "sched",
      "secrets",
      "select",
      "selectors",
      "shelve",
      "shlex",
      "shutil",
      "signal",
      "site",
      "smtpd",
      "smtplib",
      "sndhdr",
      "socket",
      "socketserver",
      "spwd",
      "sqlite3",
      "sre_compile",
      "sre_constants",
      "sre_parse",
      "ssl",
      "stat",
      "statistics",
      "string",
      "stringprep",
      "struct",
      "subprocess",
      "sunau",
      "symbol",
      "symtable",
      "sys",
      "sysconfig",
      "syslog",
      "tabnanny",
      "tarfile",
      "telnetlib",
      "tempfile",
      "termios",
      "textwrap",
      "this",
      "threading",
      "time",
      "timeit",
      "tkinter",
      "token",
      "tokenize",
      "trace",
      "traceback",
      "tracemalloc",
      "tty",
      "turtle",
      "turtledemo",
      "types",
      "typing",
      "unicodedata",
      "unittest",
      "urllib",
      "uu",
      "uuid",
      "venv",
      "warnings",
      "wave",
      "weakref",
      "webbrowser",
      "winreg",
      "winsound",
      "wsgiref",
      "xdrlib",
      "xml",
      "xmlrpc",
      "zipapp",
      "zipfile",
      "zipimport",
      "zlib"};
  return t;
}

const std::set<std::string, std::less<>>& stdlib_312() {
  static const std::set<std::string, std::less<>> t{
      "__future__",
      "_abc",
      "_aix_support",
      "_ast",
      "_asyncio",
      "_bisect",
      "_blake2",
      "_bootsubprocess",
      "_bz2",
      "_codecs",
      "_codecs_cn",
      "_codecs_hk",
      "_codecs_iso2022",
      "_codecs_jp",
      "_codecs_kr",
      "_codecs_tw",
      "_collections",
      "_collections_abc",
      "_compat_pickle",
      "_compression",
      "_contextvars",
      "_crypt",
      "_csv",
      "_ctypes",
      "_curses",
      "_curses_panel",
      "_datetime",
      "_dbm",
      "_decimal",
      "_elementtree",
      "_frozen_importlib",
      "_frozen_importlib_external",
      "_functools",
      "_gdbm",
      "_hashlib",
      "_heapq",
      "_imp",
      "_io",
      "_json",
      "_locale",
      "_lsprof",
      "_lzma",
      "_markupbase",
      "_md5",
      "_msi",
      "_multibytecodec",
      "_multiprocessing",
      "_opcode",
      "_operator",
      "_osx_support",
      "_overlapped",
      "_pickle",
      "_posixshmem",
      "_posixsubprocess",
      "_py_abc",
      "_pydecimal",
      "_pyio",
      "_queue",
      "_random",
      "_scproxy",
      "_sha1",
      "_sha256",
      "_sha3",
      "_sha512",
      "_signal",
      "_sitebuiltins",
      "_socket",
      "_sqlite3",
      "_sre",
      "_ssl",
      "_stat",
      "_statistics",
      "_string",
      "_strptime",
      "_struct",
      "_symtable",
      "_thread",
      "_threading_local",
      "_tkinter",
      "_tomllib",
      "_tracemalloc",
      "_uuid",
      "_warnings",
      "_weakref",
      "_weakrefset",
      "_winapi",
      "_zoneinfo",
      "abc",
      "aifc",
      "antigravity",
      "argparse",
      "array",
      "ast",
      "asyncio",
      "atexit",
      "audioop",
      "base64",
      "bdb",
      "binascii",
      "binhex",
      "bisect",
      "builtins",
      "bz2",
      "cProfile",
      "calendar",
      "cgi",
      "cgitb",
      "chunk",
      "cmath",
      "cmd",
      "code",
      "codecs",
      "codeop",
      "collections",
      "colorsys",
      "compileall",
      "concurrent",
      "configparser",
      "contextlib",
      "contextvars",
      "copy",
      "copyreg",
      "crypt",
      "csv",
      "ctypes",
      "curses",
      "dataclasses",
      "datetime",
      "dbm",
      "decimal",
      "difflib",
      "dis",
      "doctest",
      "email",
      "encodings",
      "ensurepip",
      "enum",
      "errno",
      "faulthandler",
      "fcntl",
      "filecmp",
      "fileinput",
      "fnmatch",
      "fractions",
      "ftplib",
      "functools",
      "gc",
      "genericpath",
      "getopt",
      "getpass",
      "gettext",
      "glob",
      "graphlib",
      "grp",
      "gzip",
      "hashlib",
      "heapq",
      "hmac",
      "html",
      "http",
      "idlelib",
      "imaplib",
      "imghdr",
      "importlib",
      "inspect",
      "io",
      "ipaddress",
      "itertools",
      "json",
      "keyword",
      "lib2to3",
      "linecache",
      "locale",
      "logging",
      "lzma",
      "mailbox",
      "mailcap",
      "marshal",
      "math",
      "mimetypes",
      "mmap",
      "modulefinder",
      "msilib",
      "msvcrt",
      "multiprocessing",
      "netrc",
      "nis",
      "nntplib",
      "nt",
      "ntpath",
      "nturl2path",
      "numbers",
      "opcode",
      "operator",
      "optparse",
      "os",
      "ossaudiodev",
      "pathlib",
      "pdb",
      "pickle",
      "pickletools",
      "pipes",
      "pkgutil",
      "platform",
      "plistlib",
      "poplib",
      "posix",
      "posixpath",
      "pprint",
      "profile",
      "pstats",
      "pty",
      "pwd",
      "py_compile",
      "pyclbr",
      "pydoc",
      "pydoc_data",
      "pyexpat",
      "queue",
      "quopri",
      "random",
      "re",
      "readline",
      "reprlib",
      "resource",
      "rlcompleter",
      "runpy",
      "sched",
      "secrets",
      "select",
      "selectors",
      "shelve",
      "shlex",
      "shutil",
      "signal",
      "site",
      "smtplib",
      "sndhdr",
      "socket",
      "socketserver",
      "spwd",
      "sqlite3",
      "sre_compile",
      "sre_constants",
      "sre_parse",
      "ssl",
      "stat",
      "statistics",
      "string",
      "stringprep",
      "struct",
      "subprocess",
      "sunau",
      "symtable",
      "sys",
      "sysconfig",
      "syslog",
      "tabnanny",
      "tarfile",
      "telnetlib",
      "tempfile",
      "termios",
      "textwrap",
      "this",
      "threading",
      "time",
      "timeit",
      "tkinter",
      "token",
      "tokenize",
      "tomllib",
      "trace",
      "traceback",
      "tracemalloc",
      "tty",
      "turtle",
      "turtledemo",
      "types",
      "typing",
      "unicodedata",
      "unittest",
      "urllib",
      "uu",
      "uuid",
      "venv",
      "warnings",
      "wave",
      "weakref",
      "webbrowser",
      "winreg",
      "winsound",
      "wsgiref",
      "xdrlib",
      "xml",
      "xmlrpc",
      "zipapp",
      "zipfile",
      "zipimport",
      "zlib",
      "zoneinfo"};
  return t;
}

const std::set<std::string, std::less<>>& builtin_names() {
  static const std::set<std::string, std::less<>> t{
      "ArithmeticError",
      "AssertionError",
      "AttributeError",
      "BaseException",
      "BlockingIOError",
      "BrokenPipeError",
      "BufferError",
      "BytesWarning",
      "ChildProcessError",
      "ConnectionAbortedError",
      "ConnectionError",
      "ConnectionRefusedError",
      "ConnectionResetError",
      "DeprecationWarning",
      "EOFError",
      "Ellipsis",
      "EncodingWarning",
      "EnvironmentError",
      "Exception",
      "False",
      "FileExistsError",
      "FileNotFoundError",
      "FloatingPointError",
      "FutureWarning",
      "GeneratorExit",
      "IOError",
      "ImportError",
      "ImportWarning",
      "IndentationError",
      "IndexError",
      "InterruptedError",
      "IsADirectoryError",
      "KeyError",
      "KeyboardInterrupt",
      "LookupError",
      "MemoryError",
      "ModuleNotFoundError",
      "NameError",
      "None",
      "NotADirectoryError",
      "NotImplemented",
      "NotImplementedError",
      "OSError",
      "OverflowError",
      "PendingDeprecationWarning",
      "PermissionError",
      "ProcessLookupError",
      "RecursionError",
      "ReferenceError",
      "ResourceWarning",
      "RuntimeError",
      "RuntimeWarning",
      "StopAsyncIteration",
      "StopIteration",
      "SyntaxError",
      "SyntaxWarning",
      "SystemError",
      "SystemExit",
      "TabError",
      "TimeoutError",
      "True",
      "TypeError",
      "UnboundLocalError",
      "UnicodeDecodeError",
      "UnicodeEncodeError",
      "UnicodeError",
      "UnicodeTranslateError",
      "UnicodeWarning",
      "UserWarning",
      "ValueError",
      "Warning",
      "ZeroDivisionError",
      "__build_class__",
      "__builtins__",
      "__debug__",
      "__doc__",
      "__file__",
      "__import__",
      "__loader__",
      "__name__",
      "__package__",
      "__spec__",
      "abs",
      "aiter",
      "all",
      "anext",
      "any",
      "apply",
      "ascii",
      "basestring",
      "bin",
      "bool",
      "breakpoint",
      "buffer",
      "bytearray",
      "bytes",
      "callable",
      "chr",
      "classmethod",
      "cmp",
      "coerce",
      "compile",
      "complex",
      "copyright",
      "credits",
      "delattr",
      "dict",
      "dir",
      "divmod",
      "enumerate",
      "eval",
      "exec",
      "execfile",
      "exit",
      "file",
      "filter",
      "float",
      "format",
      "frozenset",
      "getattr",
      "globals",
      "hasattr",
      "hash",
      "help",
      "hex",
      "id",
      "input",
      "int",
      "intern",
      "isinstance",
      "issubclass",
      "iter",
      "len",
      "license",
      "list",
      "locals",
      "long",
      "map",
      "max",
      "memoryview",
      "min",
      "next",
      "object",
      "oct",
      "open",
      "ord",
      "pow",
      "print",
      "property",
      "quit",
      "range",
      "raw_input",
      "reduce",
      "reload",
      "repr",
      "reversed",
      "round",
      "set",
      "setattr",
      "slice",
      "sorted",
      "staticmethod",
      "str",
      "sum",
      "super",
      "tuple",
      "type",
      "unichr",
      "unicode",
      "vars",
      "xrange",
      "zip"};
  return t;
}

const std::set<std::string, std::less<>>& kernel_names() {
  static const std::set<std::string, std::less<>> t{
      "In",
      "Out",
      "_",
      "__",
      "___",
      "_dh",
      "_i",
      "_ii",
      "_iii",
      "_oh",
      "display",
      "exit",
      "get_ipython",
      "quit"};
  return t;
}

}  // namespace

const std::vector<std::string>& supported_interpreter_lines() {
  static const std::vector<std::string> lines{"2.7", "3.6", "3.12"};
  return lines;
}

const std::set<std::string, std::less<>>* stdlib_table(std::string_view line) {
  if (line == "2.7") return &stdlib_27();
  if (line == "3.6") return &stdlib_36();
  if (line == "3.12") return &stdlib_312();
  return nullptr;
}

bool is_stdlib_module(std::string_view root, const std::vector<std::string>& lines) {
  if (lines.empty()) {
    return stdlib_27().count(root) || stdlib_36().count(root) || stdlib_312().count(root);
  }
  for (const auto& l : lines) {
    const auto* t = stdlib_table(l);
    if (t && t->count(root)) return true;
  }
  return false;
}

bool is_builtin_name(std::string_view name) { return builtin_names().count(name) || kernel_names().count(name); }

}  // namespace envsniff
