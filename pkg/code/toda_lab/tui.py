import curses

from .cli import exit_code_for, run_command
from .config import load_config
from .errors import ConfigError, TodaLabError, as_lab_error
from .logs import get_logger

cli_logger = get_logger("cli")

##############################################
# Common Helper Functions (Printing, Input)  #
##############################################


def print_wrapped(screen, start_y, start_x, text, max_width):
    """
    Print text at (start_y, start_x), cut to max_width so narrow terminals
    keep their alignment.
    """
    if len(text) > max_width:
        text = text[: max_width - 1]
    screen.addstr(start_y, start_x, text)


def message_box(screen, message):
    """Show a message inside the border; any key continues."""
    screen.clear()
    screen.border(0)
    lines = message.split("\n")
    max_y, max_x = screen.getmaxyx()
    y = 2
    for line in lines:
        if y >= max_y - 2:
            break
        print_wrapped(screen, y, 2, line, max_x - 4)
        y += 1
    if y < max_y - 2:
        print_wrapped(screen, y + 1, 2, "Press any key to continue...", max_x - 4)
    screen.refresh()
    screen.getch()


def input_box(screen, prompt, default=None):
    """
    Single-line prompt. ESC or 'back' returns None; an empty line returns
    `default`.
    """
    curses.noecho()
    screen.clear()
    screen.border(0)
    max_y, max_x = screen.getmaxyx()
    lines = prompt.split("\n")
    if default is not None:
        lines.append(f"[Enter keeps {default}]")
    y = 2
    for line in lines:
        if y >= max_y - 2:
            break
        print_wrapped(screen, y, 2, line, max_x - 4)
        y += 1

    print_wrapped(screen, y + 1, 2, "(Press ESC or type 'back' to return)", max_x - 4)
    input_y = y + 3
    input_x = 2
    screen.move(input_y, input_x)
    screen.refresh()

    buffer = []
    curses.curs_set(1)
    while True:
        ch = screen.getch()
        if ch == 27:  # ESC
            curses.curs_set(0)
            return None
        elif ch in (curses.KEY_BACKSPACE, 127):
            if buffer:
                buffer.pop()
                screen.delch(input_y, input_x + len(buffer))
        elif ch in (10, 13):  # Enter
            user_input = "".join(buffer).strip()
            curses.curs_set(0)
            if user_input.lower() == "back":
                return None
            return user_input or default
        elif ch in (curses.KEY_LEFT, curses.KEY_RIGHT, curses.KEY_UP, curses.KEY_DOWN):
            continue
        else:
            if 32 <= ch <= 126:
                buffer.append(chr(ch))
                screen.addch(input_y, input_x + len(buffer) - 1, ch)


##################################
# Forms                          #
##################################

BASE_PROMPTS = (
    ("N", "Number of particles N:", "2"),
    ("hbar", "Planck constant hbar:", "1.0"),
    ("Lambda", "Coupling Lambda:", "0.3"),
)

COMMAND_PROMPTS = {
    "spectrum": (("levels", "How many levels (from the ground state)?", "1"),),
    "rh-map": (("sigma", "Monodromy exponents sigma (comma-separated, e.g. 0.3j,-0.3j):", None),),
    "monodromy": (("sigma", "Monodromy exponents sigma (comma-separated, sum zero):", None),),
    "yangyang": (("delta", "Rapidities delta (comma-separated, e.g. 0.3,-0.3):", None),),
    "verify": (),
}


def ask_inputs(screen, command):
    """Collect the flag values for one command; None when the user backs out."""
    values = {}
    prompts = BASE_PROMPTS if command != "verify" else ()
    for key, prompt, default in prompts + COMMAND_PROMPTS[command]:
        answer = input_box(screen, prompt, default)
        if answer is None:
            return None
        values[key] = answer
    for key, convert in (("N", int), ("levels", int), ("hbar", float), ("Lambda", float)):
        if key in values:
            try:
                values[key] = convert(values[key])
            except ValueError:
                raise ConfigError(f"{key} must be a number, got {values[key]!r}")
    return values


def summarize(document):
    """A few lines of the result document for the message box."""
    command = document["meta"]["command"]
    results = document["results"]
    lines = [f"{command} finished"]
    if command == "spectrum":
        for row in results:
            energies = ", ".join(f"{E['re']:.10g}" for E in row["energies"])
            lines.append(f"modes {row['modes']}: E = {energies}")
            if row.get("oracle"):
                lines.append(f"  oracle deviation {row['oracle']['relative_deviation']:.2e}")
    elif command == "rh-map":
        charges = ", ".join(f"{E['re']:.8g}{E['im']:+.2g}i" for E in results["charges"])
        lines.append(f"E_2..E_N = {charges}")
        lines.append(f"monodromy mismatch {results['monodromy']['mismatch']:.2e}")
    elif command == "monodromy":
        lines.append(f"char-poly deviation {results['char_poly']['deviation']:.2e}")
        lines.append(f"connection score {results['connection']['score']:.2e}")
    elif command == "yangyang":
        lines.append(f"Y = {results['Y']['re']:.10g}{results['Y']['im']:+.10g}i")
        lines.append(f"gradient deviation {results['gradient']['max_deviation']:.2e}")
    elif command == "verify":
        summary = document["diagnostics"]
        lines.append(f"{summary['passed']}/{summary['total']} checks passed")
        lines.extend(summary["failed"][:8])
    return "\n".join(lines)


def command_form(screen, command):
    try:
        values = ask_inputs(screen, command)
        if values is None:
            return
        screen.clear()
        screen.border(0)
        print_wrapped(screen, 2, 2, f"Running {command}, please wait...", screen.getmaxyx()[1] - 4)
        screen.refresh()
        cfg = load_config(command, None, values)
        document = run_command(cfg)
        text = summarize(document)
        if exit_code_for(document):
            text += "\n(some checks failed)"
        message_box(screen, text)
    except (TodaLabError, ValueError) as error:
        e = as_lab_error(error, module="cli")
        cli_logger.error(f"Error in {command}: {e}")
        message_box(screen, f"Error:\n{type(e).__name__}: {e}")


##################################
# Menus                          #
##################################


def main_menu(screen):
    selected = 0
    options = [
        ("Spectrum", "spectrum"),
        ("Riemann-Hilbert map", "rh-map"),
        ("Monodromy algebra", "monodromy"),
        ("Yang-Yang checks", "yangyang"),
        ("Verify suite", "verify"),
        ("Exit", None),
    ]
    while True:
        screen.clear()
        screen.border(0)
        max_y, max_x = screen.getmaxyx()
        print_wrapped(screen, 2, 2, "Main Menu (ESC to exit)", max_x - 4)
        for idx, (label, _) in enumerate(options):
            prefix = "> " if idx == selected else "  "
            print_wrapped(screen, 4 + idx, 2, prefix + label, max_x - 4)

        key = screen.getch()
        if key == curses.KEY_UP and selected > 0:
            selected -= 1
        elif key == curses.KEY_DOWN and selected < len(options) - 1:
            selected += 1
        elif key in [10, 13]:
            command = options[selected][1]
            if command is None:
                break
            command_form(screen, command)
        elif key == 27:  # ESC
            break


def main(screen):
    curses.curs_set(0)
    main_menu(screen)


def run_tui():
    curses.wrapper(main)
    return 0

