# coding: utf-8

# # Dependency contexts for the TDParse methods
#
# The TDParse family pools the words connected to the target in a dependency
# parse. Parses come from CoNLL-U files produced by any external parser.

from tdsa import pooling

conll = """# sent_id = s1
1\tthe\t_\t_\t_\t_\t2\tdet\t_\t_
2\tcat\t_\t_\t_\t_\t3\tnsubj\t_\t_
3\tsat\t_\t_\t_\t_\t0\troot\t_\t_
4\ton\t_\t_\t_\t_\t6\tcase\t_\t_
5\tred\t_\t_\t_\t_\t6\tamod\t_\t_
6\tmats\t_\t_\t_\t_\t3\tobl\t_\t_
"""
(graph,) = pooling.parse_conll(conll)
print(graph.tokens, graph.heads)

# In a single tree every word is connected to every other, so the unbounded
# context is the whole sentence. The depth knob limits it to words within a
# given number of edges of the target.

target = graph.tokens.index('mats')
for depth in (None, 1, 2):
    print(depth, pooling.dep_context(graph, [target], max_depth=depth))
