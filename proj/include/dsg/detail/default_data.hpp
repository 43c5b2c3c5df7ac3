#pragma once

// Generated by tools/embed_data.cmake from data/. Do not edit.

namespace dsg::detail::embedded {

inline constexpr const char* tuple_preamble = R"dsgdata(Task: given an input prompt, describe the scene with skill-specific semantic tuples. Do not generate the same tuple twice. Do not generate tuples that the prompt does not state explicitly.
Tuple syntax: category - subcategory (arguments)
  entity - whole|part (entity)
  attribute - color|type|material|count|texture|text_rendering|shape|size|style|state (value, entity)
  relation - spatial|action (relation, subject, object)
  global - global (description)
output format: id | tuple

input: a blue motorcycle parked by paint chipped doors.
output:
1 | entity - whole (motorcycle)
2 | attribute - color (blue, motorcycle)
3 | entity - whole (doors)
4 | attribute - state (paint chipped, doors)
5 | relation - spatial (parked by, motorcycle, doors)

input: a watercolor painting of two cats sleeping on a red sofa.
output:
1 | global - global (watercolor painting)
2 | entity - whole (cats)
3 | attribute - count (two, cats)
4 | entity - whole (sofa)
5 | attribute - color (red, sofa)
6 | relation - action (sleeping on, cats, sofa)

input: {{input}}
output:
)dsgdata";

inline constexpr const char* question_preamble = R"dsgdata(Task: given an input prompt and its skill-specific tuples, rewrite each tuple as a natural-language yes/no question whose answer is "yes" when the image matches the prompt. Keep the tuple ids.
output format: id | question

input: a blue motorcycle parked by paint chipped doors.
1 | entity - whole (motorcycle)
2 | attribute - color (blue, motorcycle)
3 | entity - whole (doors)
4 | attribute - state (paint chipped, doors)
5 | relation - spatial (parked by, motorcycle, doors)
output:
1 | Is there a motorcycle?
2 | Is the motorcycle blue?
3 | Are there doors?
4 | Is the paint on the doors chipped?
5 | Is the motorcycle parked by the doors?

input: a watercolor painting of two cats sleeping on a red sofa.
1 | global - global (watercolor painting)
2 | entity - whole (cats)
3 | attribute - count (two, cats)
4 | entity - whole (sofa)
5 | attribute - color (red, sofa)
6 | relation - action (sleeping on, cats, sofa)
output:
1 | Is this a watercolor painting?
2 | Are there cats?
3 | Are there two cats?
4 | Is there a sofa?
5 | Is the sofa red?
6 | Are the cats sleeping on the sofa?

input: {{input}}
output:
)dsgdata";

inline constexpr const char* dependency_preamble = R"dsgdata(Task: given an input prompt and its tuples, list the parent tuples of each tuple. A parent must be true for the child to be a meaningful question. Use 0 for tuples without parents.
output format: id | dependencies (comma separated)

input: a blue motorcycle parked by paint chipped doors.
1 | entity - whole (motorcycle)
2 | attribute - color (blue, motorcycle)
3 | entity - whole (doors)
4 | attribute - state (paint chipped, doors)
5 | relation - spatial (parked by, motorcycle, doors)
output:
1 | 0
2 | 1
3 | 0
4 | 3
5 | 1,3

input: a watercolor painting of two cats sleeping on a red sofa.
1 | global - global (watercolor painting)
2 | entity - whole (cats)
3 | attribute - count (two, cats)
4 | entity - whole (sofa)
5 | attribute - color (red, sofa)
6 | relation - action (sleeping on, cats, sofa)
output:
1 | 0
2 | 0
3 | 2
4 | 0
5 | 4
6 | 2,4

input: {{input}}
output:
)dsgdata";

inline constexpr const char* precision_preamble = R"dsgdata(Task: a model generated questions to check the semantics of images generated from prompts. Given the prompt (ground truth), the tuples that decompose it (ground truth) and the generated questions, list for every question the ids of the tuples it is entailed by, then the ids of questions that no tuple entails.
output format:
entailed questions:
question id | tuple ids (comma separated)
wrong questions: question ids (comma separated)

input:
prompt: a blue motorcycle.
tuples:
1 | entity - whole (motorcycle)
2 | attribute - color (blue, motorcycle)
questions:
1 | Is there a motorcycle?
2 | Is the motorcycle blue?
3 | Is there a helmet?
output:
entailed questions:
1 | 1
2 | 2
wrong questions: 3

input:
{{input}}
output:
)dsgdata";

inline constexpr const char* recall_preamble = R"dsgdata(Task: a model generated questions to check the semantics of images generated from prompts. Given the prompt (ground truth), the tuples that decompose it (ground truth) and the generated questions, list for every tuple the ids of the questions covering it, then the ids of tuples no question covers.
output format:
covered tuples:
tuple id | question ids (comma separated)
missed tuples: tuple ids (comma separated)

input:
prompt: a blue motorcycle.
tuples:
1 | entity - whole (motorcycle)
2 | attribute - color (blue, motorcycle)
questions:
1 | Is there a motorcycle?
output:
covered tuples:
1 | 1
missed tuples: 2

input:
{{input}}
output:
)dsgdata";

inline constexpr const char* uniqueness_preamble = R"dsgdata(Task: a model generated questions to check the semantics of images generated from prompts. Given the prompt (ground truth) and the generated questions, list the ids of duplicated questions, one group per line. Write "duplicates: none" when every question is unique.
output format: duplicates: ids of duplicated questions

input:
prompt: a blue motorcycle.
questions:
1 | Is there a motorcycle?
2 | Is the motorcycle blue?
3 | What type of vehicle is this?
output:
duplicates: q1,q3

input:
{{input}}
output:
)dsgdata";

inline constexpr const char* stopwords = R"dsgdata(a
about
above
after
again
against
all
am
an
and
any
are
as
at
be
been
being
below
between
both
but
by
can
could
did
do
does
doing
down
during
each
few
for
from
further
had
has
have
having
he
her
here
hers
herself
him
himself
his
how
i
if
in
into
is
it
its
itself
just
me
more
most
my
myself
no
nor
not
of
off
on
once
only
or
other
our
ours
ourselves
out
over
own
same
she
should
so
some
such
than
that
the
their
theirs
them
themselves
then
there
these
they
this
those
through
to
too
under
until
up
very
was
we
were
what
when
where
which
while
who
whom
why
will
with
would
you
your
yours
yourself
yourselves
)dsgdata";

}  // namespace dsg::detail::embedded
