BLOCKS = {(0, 0): " ", (1, 0): "▀", (0, 1): "▄", (1, 1): "█"}


def render(bitmap):
    """Two bitmap rows per text row using half blocks."""
    lines = []
    for y in range(0, len(bitmap), 2):
        top = bitmap[y]
        bottom = bitmap[y + 1] if y + 1 < len(bitmap) else [0] * len(top)
        lines.append("".join(BLOCKS[(t, b)] for t, b in zip(top, bottom)))
    return "\n".join(lines)


def show(bitmap):
    print(render(bitmap))
